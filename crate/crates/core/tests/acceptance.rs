//! Acceptance gate: runs every criterion at full scale and prints one
//! PASS/FAIL line per criterion. Exits non-zero if any criterion fails.

use std::collections::HashMap;
use std::time::Instant;

use gfflab::experiment::{run_experiment, ExperimentConfig, ExperimentKind, Outcome};
use gfflab::kernels::wick_predict;
use gfflab::{DirichletOperator, GridPoint, LatticeDomain, Shape};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<(bool, String), String>;

fn run(kind: ExperimentKind) -> Result<Outcome, String> {
    let cfg = ExperimentConfig { experiment: Some(kind), ..Default::default() }.resolve().map_err(|e| e.to_string())?;
    run_experiment(&cfg).map_err(|e| e.to_string())
}

fn checks_line(o: &Outcome) -> String {
    o.report
        .checks
        .iter()
        .map(|c| format!("{}={} ({})", c.name, if c.passed { "ok" } else { "FAILED" }, c.detail))
        .collect::<Vec<_>>()
        .join("; ")
}

fn report_verdict(outcomes: &mut HashMap<ExperimentKind, Outcome>, kind: ExperimentKind) -> Verdict {
    let o = run(kind)?;
    let v = (o.report.passed, checks_line(&o));
    outcomes.insert(kind, o);
    Ok(v)
}

fn bridge_verdict(outcomes: &mut HashMap<ExperimentKind, Outcome>) -> Verdict {
    let o = run(ExperimentKind::BridgeSuite)?;
    let r = &o.report;
    let get = |n: &str| r.check(n).map(|c| (c.passed, c.detail.clone())).unwrap_or((false, "missing".into()));
    let qv = r.summary["bridge"]["qv_slope"].as_f64().unwrap_or(f64::NAN);
    let qv_ok = (qv - 1.0).abs() <= 0.05;
    let parts = [
        ("covariance", get("bridge_bridge_covariance")),
        ("qv_slope", (qv_ok && get("bridge_quadratic_variation_slope").0, format!("slope {qv:.5} vs sigma^2 = 1"))),
        ("scaling", get("bridge_scaling_identity_moments")),
        ("control_rejected", get("control_rejected")),
    ];
    let ok = parts.iter().all(|(_, (p, _))| *p);
    let detail = parts.iter().map(|(n, (p, d))| format!("{n}={} ({d})", if *p { "ok" } else { "FAILED" })).collect::<Vec<_>>().join("; ");
    outcomes.insert(ExperimentKind::BridgeSuite, o);
    Ok((ok, detail))
}

/// Dense reference Laplacian built directly from the vertex set.
fn dense_laplacian(dom: &LatticeDomain) -> DMatrix<f64> {
    let n = dom.n_interior();
    let mut a = DMatrix::zeros(n, n);
    for (i, g) in dom.interior().iter().enumerate() {
        a[(i, i)] = 4.0;
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            if let Some(j) = dom.interior_index(GridPoint::new(g.x + dx, g.y + dy)) {
                a[(i, j)] = -1.0;
            }
        }
    }
    a
}

fn oracle_verdict() -> Verdict {
    let e = |x: gfflab::Error| x.to_string();
    // Green's function against a dense inverse on small domains
    let domains = [
        LatticeDomain::from_shape(Shape::Square { side: 1.0 }, 0.1).map_err(e)?,
        LatticeDomain::from_shape(Shape::Disk { radius: 1.0, center: [0.0, 0.0] }, 0.2).map_err(e)?,
        LatticeDomain::from_shape(Shape::Wedge { half_angle: 1.0 }, 0.125).map_err(e)?,
    ];
    let mut max_green = 0.0f64;
    let mut sizes = Vec::new();
    for dom in domains {
        let n = dom.n_interior();
        sizes.push(n);
        if n > 100 {
            return Err(format!("oracle domain has {n} > 100 vertices"));
        }
        let inv = dense_laplacian(&dom).try_inverse().ok_or("singular reference matrix")?;
        let op = DirichletOperator::new(dom).map_err(e)?;
        for (k, z) in op.domain().interior().to_vec().into_iter().enumerate() {
            let col = op.green_column(z).map_err(e)?;
            for (i, v) in col.values().iter().enumerate() {
                max_green = max_green.max((v - inv[(i, k)]).abs());
            }
        }
    }
    let green_ok = max_green <= 1e-10;

    // harmonic measure against random-walk exits on the 3x3 block
    let mask: Vec<GridPoint> = (-1..=1).flat_map(|y| (-1..=1).map(move |x| GridPoint::new(x, y))).collect();
    let dom = LatticeDomain::from_mask(mask, 0.25).map_err(e)?;
    let op = DirichletOperator::new(dom).map_err(e)?;
    let start = GridPoint::new(0, 0);
    let row = op.harmonic_measure_row(start).map_err(e)?;
    let walks = 200_000usize;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut hits = vec![0usize; op.domain().n_boundary()];
    for _ in 0..walks {
        let mut p = start;
        while op.domain().interior_index(p).is_some() {
            p = p.neighbours()[rng.gen_range(0..4)];
        }
        hits[op.domain().boundary_index(p).ok_or("walk left through a non-boundary vertex")?] += 1;
    }
    let mut max_z = 0.0f64;
    for (h, p) in hits.iter().zip(row.values()) {
        let est = *h as f64 / walks as f64;
        let se = (p * (1.0 - p) / walks as f64).sqrt();
        if se > 0.0 {
            max_z = max_z.max((est - p).abs() / se);
        } else if *h > 0 {
            max_z = f64::INFINITY;
        }
    }
    let walk_ok = max_z <= 3.0;

    // pairing sum against brute-force enumeration of perfect matchings
    fn matchings(items: &[usize], k: &DMatrix<f64>) -> f64 {
        if items.is_empty() {
            return 1.0;
        }
        let first = items[0];
        let mut total = 0.0;
        for j in 1..items.len() {
            let rest: Vec<usize> = items[1..].iter().enumerate().filter(|(i, _)| *i + 1 != j).map(|(_, v)| *v).collect();
            total += k[(first, items[j])] * matchings(&rest, k);
        }
        total
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut wick_mismatch = 0usize;
    for _ in 0..1000 {
        let mut k = DMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in i + 1..4 {
                let v: f64 = rng.gen_range(-2.0..2.0);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        let flat = [k[(0, 1)], k[(0, 2)], k[(0, 3)], k[(1, 2)], k[(1, 3)], k[(2, 3)]];
        if wick_predict(flat) != matchings(&[0, 1, 2, 3], &k) {
            wick_mismatch += 1;
        }
    }
    let wick_ok = wick_mismatch == 0;
    Ok((
        green_ok && walk_ok && wick_ok,
        format!(
            "green vs dense inverse max diff {max_green:.2e} on {sizes:?} vertices; harmonic measure vs {walks} walks max |z| {max_z:.2}; wick vs matchings {wick_mismatch} mismatches of 1000"
        ),
    ))
}

fn determinism_verdict(first: &HashMap<ExperimentKind, Outcome>) -> Verdict {
    let mut same = Vec::new();
    let mut differ = Vec::new();
    for kind in ExperimentKind::ALL {
        let a = first.get(&kind).ok_or(format!("{kind} has no first run"))?;
        let b = run(kind)?;
        let ok = a.report.to_json().map_err(|e| e.to_string())? == b.report.to_json().map_err(|e| e.to_string())?
            && a.data.to_csv() == b.data.to_csv();
        if ok {
            same.push(kind.name());
        } else {
            differ.push(kind.name());
        }
    }
    Ok((differ.is_empty(), format!("byte-identical reruns: {same:?}; differing: {differ:?}")))
}

fn main() {
    let mut outcomes = HashMap::new();
    let mut all = true;
    let mut line = |id: &str, name: &str, v: Verdict, secs: f64| {
        let (ok, detail) = v.unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= ok;
        println!("{id} {} {name} [{secs:.0}s]: {detail}", if ok { "PASS" } else { "FAIL" });
    };
    let criteria: [(&str, &str, ExperimentKind); 7] = [
        ("C1", "log-variance law", ExperimentKind::LogVariance),
        ("C2", "two-point kernel is a multiple of G", ExperimentKind::K2Green),
        ("C3", "Wick rule", ExperimentKind::Wick),
        ("C4", "domain Markov property", ExperimentKind::Markov),
        ("C5", "conformal invariance", ExperimentKind::Conformal),
        ("C6", "Dirichlet boundary", ExperimentKind::Boundary),
        ("C7", "wedge fourth-moment scaling", ExperimentKind::WedgeScan),
    ];
    for (id, name, kind) in criteria {
        let t = Instant::now();
        let v = report_verdict(&mut outcomes, kind);
        line(id, name, v, t.elapsed().as_secs_f64());
    }
    let t = Instant::now();
    let v = bridge_verdict(&mut outcomes);
    line("C8", "one-dimensional harness suite", v, t.elapsed().as_secs_f64());
    let t = Instant::now();
    line("C9", "oracle equivalences", oracle_verdict(), t.elapsed().as_secs_f64());
    let t = Instant::now();
    let v = determinism_verdict(&outcomes);
    line("C10", "determinism", v, t.elapsed().as_secs_f64());
    if !all {
        std::process::exit(1);
    }
}
