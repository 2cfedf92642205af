//! Domain Markov decomposition `h = h_D^{D′} + φ_D^{D′}`.
//!
//! On the lattice the decomposition is a deterministic function of the sample:
//! `φ` is the harmonic extension into `D′` of the field's values on `∂D′` (and
//! equals the field outside `D′`), and `h_D^{D′} = h - φ` vanishes outside
//! `D′`. The distributional content (the zero part is a GFF on `D′`,
//! independent of `φ`) is checked by Monte-Carlo covariances.

use std::sync::Arc;

use serde::Serialize;

use crate::domain::LatticeDomain;
use crate::error::{Error, Result};
use crate::laplace::{BoundaryData, DirichletOperator, ScalarField, DEFAULT_TOL};
use crate::sampler::LinearFunctional;
use crate::stats;

/// The two parts of a field relative to a subdomain.
#[derive(Clone, Debug)]
pub struct MarkovDecomposition {
    pub sub: Arc<LatticeDomain>,
    /// Zero outside `D′`; distributed as the GFF of `D′` inside.
    pub zero_part: ScalarField,
    /// Harmonic in `D′`; equal to the field outside.
    pub harmonic_part: ScalarField,
}

impl MarkovDecomposition {
    /// Zero part restricted to `D′`, as a field on the subdomain.
    pub fn zero_part_in_sub(&self) -> ScalarField {
        let values = self.sub.interior().iter().map(|g| self.zero_part.at(*g)).collect();
        ScalarField::from_parts(Arc::clone(&self.sub), values)
    }

    /// Largest `|zero + harmonic − field|`.
    pub fn reassembly_error(&self, field: &ScalarField) -> f64 {
        (&(&self.zero_part + &self.harmonic_part) - field).max_abs()
    }

    /// Largest `|zero_part|` over interior vertices of `D` outside `D′`.
    pub fn leakage(&self) -> f64 {
        let dom = self.zero_part.domain();
        dom.interior()
            .iter()
            .zip(self.zero_part.values())
            .filter(|(g, _)| self.sub.interior_index(**g).is_none())
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }
}

/// Reusable decomposer for one pair `D′ ⊂ D` (factorises `D′` once).
#[derive(Debug)]
pub struct MarkovDecomposer {
    parent: Arc<LatticeDomain>,
    sub_op: DirichletOperator,
    /// Parent interior index of each vertex of `D′`.
    sub_to_parent: Vec<usize>,
}

impl MarkovDecomposer {
    pub fn new(parent: &Arc<LatticeDomain>, sub: &LatticeDomain) -> Result<Self> {
        if !sub.is_subdomain_of(parent) {
            return Err(Error::SubdomainNotContained);
        }
        if !sub.is_simply_connected() {
            return Err(Error::NotSimplyConnected);
        }
        let sub = Arc::new(sub.clone());
        let sub_to_parent = sub
            .interior()
            .iter()
            .map(|g| parent.interior_index(*g).expect("checked containment"))
            .collect();
        let sub_op = DirichletOperator::assemble(&sub, DEFAULT_TOL)?;
        Ok(Self { parent: Arc::clone(parent), sub_op, sub_to_parent })
    }

    pub fn sub(&self) -> &Arc<LatticeDomain> {
        self.sub_op.domain()
    }

    pub fn sub_op(&self) -> &DirichletOperator {
        &self.sub_op
    }

    /// Trace of `field` on `∂D′` (zero where `∂D′` meets `∂D`).
    pub fn trace(&self, field: &ScalarField) -> Result<BoundaryData> {
        if field.domain().hash() != self.parent.hash() {
            return Err(Error::DomainMismatch);
        }
        BoundaryData::new(self.sub(), self.sub().boundary().iter().map(|b| field.at(*b)).collect())
    }

    pub fn decompose(&self, field: &ScalarField) -> Result<MarkovDecomposition> {
        let trace = self.trace(field)?;
        let inside = self.sub_op.harmonic_extension(&trace)?;
        let mut harmonic = field.values().to_vec();
        for (&p, v) in self.sub_to_parent.iter().zip(inside.values()) {
            harmonic[p] = *v;
        }
        let harmonic_part = ScalarField::from_parts(Arc::clone(&self.parent), harmonic);
        let zero_part = field - &harmonic_part;
        Ok(MarkovDecomposition { sub: Arc::clone(self.sub()), zero_part, harmonic_part })
    }

    /// Largest violation of the mean-value property of the harmonic part inside `D′`.
    pub fn harmonic_residual(&self, d: &MarkovDecomposition, field: &ScalarField) -> Result<f64> {
        let inside = ScalarField::from_parts(
            Arc::clone(self.sub()),
            self.sub_to_parent.iter().map(|&p| d.harmonic_part.values()[p]).collect(),
        );
        Ok(self.sub_op.mean_value_residual(&inside, &self.trace(field)?))
    }

    /// Harmonic part rebuilt vertex by vertex from harmonic-measure averages,
    /// compared with [`decompose`](Self::decompose). Returns the largest difference.
    pub fn uniqueness_discrepancy(&self, field: &ScalarField) -> Result<f64> {
        let direct = self.decompose(field)?;
        let trace = self.trace(field)?;
        let mut worst = 0.0f64;
        for (g, &p) in self.sub().interior().iter().zip(&self.sub_to_parent) {
            let hm = self.sub_op.harmonic_measure_row(*g)?;
            let v: f64 = hm.values().iter().zip(trace.values()).map(|(w, h)| w * h).sum();
            worst = worst.max((v - direct.harmonic_part.values()[p]).abs());
        }
        Ok(worst)
    }

    /// `φ_D^{D′}(x)` as a linear functional of the field, for `x` in `D′`.
    pub fn harmonic_functional(&self, x: crate::domain::GridPoint) -> Result<LinearFunctional> {
        let hm = self.sub_op.harmonic_measure_row(x)?;
        let terms = self
            .sub()
            .boundary()
            .iter()
            .zip(hm.values())
            .filter_map(|(b, w)| self.parent.interior_index(*b).map(|i| (i, *w)))
            .collect();
        LinearFunctional::new(&self.parent, terms)
    }
}

pub fn markov_decompose(field: &ScalarField, sub: &LatticeDomain) -> Result<MarkovDecomposition> {
    MarkovDecomposer::new(field.domain(), sub)?.decompose(field)
}

/// Both routes to the harmonic part agree within `1e-9`.
pub fn uniqueness_check(field: &ScalarField, sub: &LatticeDomain) -> Result<bool> {
    Ok(MarkovDecomposer::new(field.domain(), sub)?.uniqueness_discrepancy(field)? <= 1e-9)
}

/// One probe of the independence check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeRow {
    pub probe: usize,
    pub corr: f64,
    pub se: f64,
    pub flag: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub rows: Vec<ProbeRow>,
    pub n_samples: usize,
}

impl IndependenceReport {
    pub fn n_flags(&self) -> usize {
        self.rows.iter().filter(|r| r.flag).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.rows)?)
    }
}

pub const MIN_INDEPENDENCE_SAMPLES: usize = 1000;

/// Correlation test on precomputed probe values: `pairs[k] = (ℓ_k(zero parts), m_k(harmonic parts))`.
pub fn independence_from_values(pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<IndependenceReport> {
    let m = pairs.first().map_or(0, |p| p.0.len());
    if m < MIN_INDEPENDENCE_SAMPLES {
        return Err(Error::InsufficientSamples { need: MIN_INDEPENDENCE_SAMPLES, got: m });
    }
    let rows = pairs
        .iter()
        .enumerate()
        .map(|(k, (a, b))| {
            let corr = stats::correlation(a, b);
            let se = ((1.0 - corr * corr) / (m as f64 - 2.0)).sqrt();
            ProbeRow { probe: k, corr, se, flag: corr.abs() > 3.0 * se }
        })
        .collect();
    Ok(IndependenceReport { rows, n_samples: m })
}

/// Correlation between `ℓ(zero part)` and `m(harmonic part)` for each probe pair.
pub fn independence_check(
    samples: &[MarkovDecomposition],
    probes: &[(LinearFunctional, LinearFunctional)],
) -> Result<IndependenceReport> {
    if samples.len() < MIN_INDEPENDENCE_SAMPLES {
        return Err(Error::InsufficientSamples { need: MIN_INDEPENDENCE_SAMPLES, got: samples.len() });
    }
    let pairs = probes
        .iter()
        .map(|(l, m)| {
            let a = samples.iter().map(|s| l.apply(&s.zero_part)).collect::<Result<Vec<_>>>()?;
            let b = samples.iter().map(|s| m.apply(&s.harmonic_part)).collect::<Result<Vec<_>>>()?;
            Ok((a, b))
        })
        .collect::<Result<Vec<_>>>()?;
    independence_from_values(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::GridPoint;
    use crate::sampler::GffSampler;
    use crate::Point;

    fn setup(delta: f64) -> (Arc<DirichletOperator>, LatticeDomain) {
        let op = Arc::new(DirichletOperator::new(LatticeDomain::disk(1.0, delta).unwrap()).unwrap());
        let sub = op.domain().subdomain_ball(Point::new(0.1, 0.0), 0.5).unwrap();
        (op, sub)
    }

    #[test]
    fn gff_sample_decomposes_exactly() {
        let (op, sub) = setup(1.0 / 16.0);
        let h = GffSampler::new(Arc::clone(&op), 1).sample();
        let dec = MarkovDecomposer::new(op.domain(), &sub).unwrap();
        let d = dec.decompose(&h).unwrap();
        assert!(d.reassembly_error(&h) <= 1e-12);
        assert_eq!(d.leakage(), 0.0);
        assert!(dec.harmonic_residual(&d, &h).unwrap() <= 1e-10);
    }

    #[test]
    fn harmonic_and_zero_fields() {
        let (op, sub) = setup(1.0 / 16.0);
        let dom = op.domain();
        let harmonic = ScalarField::from_fn(dom, |p| 1.0 + p.re - 2.0 * p.im).unwrap();
        let d = markov_decompose(&harmonic, &sub).unwrap();
        assert!(d.zero_part.max_abs() < 1e-10);
        let zero = ScalarField::zeros(dom);
        let d = markov_decompose(&zero, &sub).unwrap();
        assert_eq!(d.zero_part.max_abs(), 0.0);
        assert_eq!(d.harmonic_part.max_abs(), 0.0);
    }

    #[test]
    fn rejects_foreign_and_holed_subdomains() {
        let (op, _) = setup(1.0 / 16.0);
        let h = ScalarField::zeros(op.domain());
        let outside = LatticeDomain::from_mask([GridPoint::new(40, 40)], 1.0 / 16.0).unwrap();
        assert!(matches!(markov_decompose(&h, &outside), Err(Error::SubdomainNotContained)));
        let ring: Vec<GridPoint> = (-3..=3)
            .flat_map(|y| (-3..=3).map(move |x| GridPoint::new(x, y)))
            .filter(|g| g.x.abs().max(g.y.abs()) >= 2)
            .collect();
        let ring = LatticeDomain::from_mask(ring, 1.0 / 16.0).unwrap();
        assert!(matches!(markov_decompose(&h, &ring), Err(Error::NotSimplyConnected)));
    }

    #[test]
    fn uniqueness_routes_agree_including_spikes() {
        let (op, sub) = setup(1.0 / 16.0);
        let dom = op.domain();
        let mut s = GffSampler::new(Arc::clone(&op), 4);
        for _ in 0..5 {
            assert!(uniqueness_check(&s.sample(), &sub).unwrap());
        }
        let mut spike = vec![0.0; dom.n_interior()];
        spike[dom.interior_index(GridPoint::new(2, 1)).unwrap()] = 1e3;
        assert!(uniqueness_check(&ScalarField::new(dom, spike).unwrap(), &sub).unwrap());
    }

    #[test]
    fn tower_property() {
        let (op, mid) = setup(1.0 / 16.0);
        let dom = op.domain();
        let inner = dom.subdomain_ball(Point::new(0.1, 0.0), 0.25).unwrap();
        let h = GffSampler::new(Arc::clone(&op), 6).sample();
        let direct = markov_decompose(&h, &inner).unwrap();
        let first = markov_decompose(&h, &mid).unwrap();
        let second = markov_decompose(&first.zero_part_in_sub(), &inner).unwrap();
        for g in inner.interior() {
            let lhs = direct.harmonic_part.at(*g);
            let rhs = first.harmonic_part.at(*g) + second.harmonic_part.at(*g);
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_functional_matches_decomposition() {
        let (op, sub) = setup(1.0 / 16.0);
        let dec = MarkovDecomposer::new(op.domain(), &sub).unwrap();
        let h = GffSampler::new(Arc::clone(&op), 2).sample();
        let d = dec.decompose(&h).unwrap();
        let x = GridPoint::new(3, 2);
        let f = dec.harmonic_functional(x).unwrap();
        assert!((f.apply(&h).unwrap() - d.harmonic_part.at(x)).abs() < 1e-12);
    }

    #[test]
    fn independence_needs_samples_and_detects_identity() {
        assert!(matches!(independence_check(&[], &[]), Err(Error::InsufficientSamples { .. })));
        let a: Vec<f64> = (0..2000).map(|i| ((i * 37) % 101) as f64).collect();
        let r = independence_from_values(&[(a.clone(), a)]).unwrap();
        assert!((r.rows[0].corr - 1.0).abs() < 1e-12);
        assert!(r.rows[0].flag);
        assert!(r.to_json().unwrap().contains("\"corr\""));
    }
}
