//! Built-in verification suites with a measured-value table.

use std::fmt::Write as _;

use ccembed_core::bdf::{
    assemble_bdf, assemble_g, choose_epsilon, compute_phi, flow_collar, make_cutoff, CutoffKind, FlowOptions, CONSISTENCY_TOL,
    IDENTITY_TOL,
};
use ccembed_core::builtins::{self, Builtin};
use ccembed_core::compose::{
    compose, induced_curvature_inequality, pullback_halfspace, synthetic_half_plane, verify_p_embedding, VerifyTolerances,
};
use ccembed_core::curvature::{curvature_limit_scan, kappa_field, CurvatureOptions, PlaneFamily};
use ccembed_core::embed::{analytic_embedding, optimize_embedding, AnalyticSurface, OptimizerConfig};
use ccembed_core::manifold::{BoundaryEnds, ModelManifold};
use ccembed_core::{Error, Expr, Frame, MetricSpec, SmoothFunction, SymMat, SymTensorField};

use crate::pipeline::{run_pipeline, StopAfter, LIMIT_RADII};
use crate::report::{Bound, Verdict};
use crate::PipelineConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Invariants,
    Limits,
    NegativeControls,
    All,
}

impl Suite {
    pub fn from_name(name: &str) -> Option<Suite> {
        match name {
            "invariants" => Some(Suite::Invariants),
            "limits" => Some(Suite::Limits),
            "negative-controls" => Some(Suite::NegativeControls),
            "all" => Some(Suite::All),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub suite: &'static str,
    pub check: String,
    pub value: f64,
    pub bound: Bound,
}

impl SuiteRow {
    pub fn passed(&self) -> bool {
        self.bound.holds(self.value)
    }
}

#[derive(Debug, Clone, Default)]
struct Rows {
    suite: &'static str,
    rows: Vec<SuiteRow>,
}

impl Rows {
    fn add(&mut self, check: impl Into<String>, value: f64, bound: Bound) {
        self.rows.push(SuiteRow { suite: self.suite, check: check.into(), value, bound });
    }

    /// A check that could not be evaluated is recorded as a NaN, which fails every bound.
    fn try_add(&mut self, check: impl Into<String>, value: Result<f64, Error>, bound: Bound) {
        let check = check.into();
        match value {
            Ok(v) => self.add(check, v, bound),
            Err(e) => self.add(format!("{check} ({e})"), f64::NAN, bound),
        }
    }
}

pub fn run_suite(suite: Suite) -> Vec<SuiteRow> {
    match suite {
        Suite::Invariants => invariants(),
        Suite::Limits => limits(),
        Suite::NegativeControls => negative_controls(),
        Suite::All => [invariants(), limits(), negative_controls()].concat(),
    }
}

pub fn render_table(rows: &[SuiteRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<18} {:<52} {:>22}  {:<26} result", "suite", "check", "value", "bound");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<18} {:<52} {:>22.12e}  {:<26} {}",
            r.suite,
            r.check,
            r.value,
            r.bound.to_string(),
            if r.passed() { "pass" } else { "FAIL" }
        );
    }
    let failed = rows.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(out, "{} checks, {} failed", rows.len(), failed);
    out
}

/// `dr^2 / c^2 + dy^2` on the collar torus: with the zero cutoff `G` is the flat
/// cylinder `(1/c^2 - 1) dr^2 + dy^2`.
pub fn flat_collar(c: f64) -> Result<MetricSpec, Error> {
    let torus = ModelManifold::collar_torus(2, 1.0, &[std::f64::consts::TAU], BoundaryEnds::Inner)?;
    let rr = format!("{}", 1.0 / (c * c));
    MetricSpec::from_sources(torus, &[&[rr.as_str(), "0"], &["0", "1"]], "r")
}

/// Isometry residual of the closed-form flat-cylinder path on a `n x n` collar.
pub fn flat_cylinder_residual(c: f64, eps: f64, n: usize) -> Result<f64, Error> {
    let spec = flat_collar(c)?;
    let b = spec.manifold().boundary_grid(0, n)?;
    let nf = flow_collar(&spec, &b, eps, n, &FlowOptions::default())?;
    let p = assemble_bdf(&nf, compute_phi(make_cutoff(eps, CutoffKind::Zero)?, 64)?)?;
    let g = assemble_g(&nf, &p)?;
    let a = Expr::parse(&format!("{}", (1.0 / (c * c) - 1.0).sqrt()), &["t"])?;
    let surface = AnalyticSurface::Revolution { a, b: Expr::Const(1.0) };
    let v = analytic_embedding(&surface, &nf.grid.product())?;
    let u = compose(&p, &nf.grid, v, 1.0)?;
    Ok(pullback_halfspace(&u, &g.x2g)?.max_residual)
}

fn invariants() -> Vec<SuiteRow> {
    let mut t = Rows { suite: "invariants", ..Default::default() };
    let samples: Vec<f64> = (0..200).map(|k| (k as f64 + 0.5) * 0.5 / 200.0).collect();
    for kind in [CutoffKind::Smoothstep5, CutoffKind::SmoothExp, CutoffKind::PiecewiseLinear, CutoffKind::Zero] {
        let d = make_cutoff(0.5, kind).and_then(|c| compute_phi(c, 512)).and_then(|p| p.cutoff_identity_defect(&samples));
        t.try_add(format!("cutoff identity, {}", kind.name()), d, Bound::AtMost(IDENTITY_TOL));
    }

    let g = builtins::scaled_disk(2, 4.0).and_then(|spec| {
        let b = spec.manifold().boundary_grid(0, 32)?;
        let nf = flow_collar(&spec, &b, 0.5, 32, &FlowOptions::default())?;
        let p = assemble_bdf(&nf, compute_phi(make_cutoff(0.5, CutoffKind::Smoothstep5)?, 512)?)?;
        assemble_g(&nf, &p)
    });
    t.try_add("G consistency, scaled-disk(4)", g.as_ref().map(|g| g.max_disagreement).map_err(Clone::clone), Bound::AtMost(CONSISTENCY_TOL));
    t.try_add("G min eigenvalue, scaled-disk(4)", g.map(|g| g.min_eigenvalue()), Bound::Above(0.0));

    for b in builtins::default_builtins() {
        let worst = b.spec(2).and_then(|spec| {
            let nodes = spec.manifold().boundary_grid(0, 16)?.nodes;
            let k = kappa_field(&spec, spec.reference_bdf(), &nodes)?;
            let mut worst: f64 = 0.0;
            for lambda in [0.5, 2.0, 5.0] {
                let scaled = spec.scaled(lambda * lambda);
                let ks = kappa_field(&scaled, scaled.reference_bdf(), &nodes)?;
                for (a, b) in k.values.iter().zip(&ks.values) {
                    let want = a / (lambda * lambda);
                    worst = worst.max((b - want).abs() / want.abs());
                }
            }
            Ok(worst)
        });
        t.try_add(format!("rescaling law, {}", b.name()), worst, Bound::AtMost(1e-12));
    }

    let inv = builtins::hyperbolic_disk(2).and_then(|spec| {
        let nodes = spec.manifold().boundary_grid(0, 32)?.nodes;
        let e = Expr::parse("exp(0.3*sin(y1))*(1 - y1^2 - y2^2)", &["y1", "y2"])?;
        let k0 = kappa_field(&spec, spec.reference_bdf(), &nodes)?;
        let k1 = kappa_field(&spec, &SmoothFunction::new(e, 2), &nodes)?;
        Ok(k0.values.iter().zip(&k1.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    });
    t.try_add("bdf invariance, psi = 0.3 sin(y1)", inv, Bound::AtMost(1e-8));

    for lambda in [0.5, 1.0, 2.0] {
        let dev = synthetic_half_plane(lambda, 3, 17)
            .and_then(|u| induced_curvature_inequality(&u, None, 0.0))
            .map(|c| c.induced.iter().map(|k| (k + lambda * lambda).abs()).fold(0.0, f64::max));
        t.try_add(format!("half-plane equality, lambda = {lambda}"), dev, Bound::AtMost(1e-8));
    }
    t.try_add("flat cylinder analytic path", flat_cylinder_residual(0.5, 0.5, 32), Bound::AtMost(1e-8));
    t.rows
}

/// Number of steps along the scan where the error fails to decrease strictly.
pub fn non_decreasing_steps(scan: &[(f64, f64)]) -> usize {
    scan.windows(2).filter(|w| !(w[1].1 < w[0].1)).count()
}

fn limits() -> Vec<SuiteRow> {
    let mut t = Rows { suite: "limits", ..Default::default() };
    let opts = CurvatureOptions::default();
    let bumped = ModelManifold::disk(2).and_then(|d| MetricSpec::from_sources(d, &[&["4 + y1", "0"], &["0", "4 + y1"]], "1 - y1^2 - y2^2"));
    let cases: Vec<(&str, Result<MetricSpec, Error>)> =
        vec![("scaled-disk(4)", builtins::scaled_disk(2, 4.0)), ("bumped disk 4 + y1", bumped), ("hyperbolic-disk", builtins::hyperbolic_disk(2))];
    for (name, spec) in cases {
        for family in [PlaneFamily::Normal, PlaneFamily::Tangential] {
            let scan = spec.as_ref().map_err(Clone::clone).and_then(|s| {
                let nodes = s.manifold().boundary_grid(0, 8)?.nodes;
                curvature_limit_scan(s, &nodes[1], family, &LIMIT_RADII, &opts)
            });
            match scan {
                Ok(scan) => {
                    let max = scan.iter().map(|p| p.1).fold(0.0, f64::max);
                    if name == "hyperbolic-disk" {
                        t.add(format!("{name} {family:?}, max |K + 1|"), max, Bound::AtMost(1e-6));
                    } else {
                        t.add(format!("{name} {family:?}, non-decreasing steps"), non_decreasing_steps(&scan) as f64, Bound::AtMost(0.0));
                    }
                }
                Err(e) => t.add(format!("{name} {family:?} ({e})"), f64::NAN, Bound::AtMost(0.0)),
            }
        }
    }
    t.rows
}

fn negative_controls() -> Vec<SuiteRow> {
    let mut t = Rows { suite: "negative-controls", ..Default::default() };
    let border = builtins::borderline().and_then(|spec| {
        let b = spec.manifold().boundary_grid(0, 16)?;
        let nf = flow_collar(&spec, &b, 0.5, 16, &FlowOptions::default())?;
        let p = assemble_bdf(&nf, compute_phi(make_cutoff(0.5, CutoffKind::Smoothstep5)?, 512)?)?;
        let g = assemble_g(&nf, &p)?;
        let j = nf.grid.boundary.nodes.iter().position(|n| n.params[0] == 0.0).expect("node at y1 = 0");
        let eps = match choose_epsilon(&nf, 0.05) {
            Err(Error::HypothesisViolation { .. }) => 1.0,
            _ => 0.0,
        };
        Ok((g.min_eigenvalues[j] / g.g.values[j].trace(), eps))
    });
    t.try_add("borderline, min eig / trace at y1 = 0", border.as_ref().map(|b| b.0).map_err(Clone::clone), Bound::AtMost(1e-6));
    t.try_add("borderline, epsilon rejected", border.map(|b| b.1), Bound::AtLeast(1.0));

    let mut cfg = PipelineConfig::builtin("hyperbolic-disk", 1.0);
    cfg.bdf.boundary_nodes = 16;
    let code = run_pipeline(&cfg, StopAfter::Kappa).map(|o| o.report.verdict).unwrap_or(Verdict::Fail).exit_code();
    t.add("hyperbolic-disk lambda = 1, exit code", code as f64, Bound::Within { target: 2.0, tol: 0.0 });

    let tv = synthetic_half_plane(1.0, 3, 9).and_then(|mut u| {
        u.dx[4] = 0.0;
        let g = SymTensorField::new(Frame::Coordinate, vec![SymMat::identity(2); u.len()]);
        verify_p_embedding(&u, &g, &VerifyTolerances::default())
    });
    t.try_add("zeroed dx at r = 0, transversal", tv.map(|r| if r.transversal { 1.0 } else { 0.0 }), Bound::AtMost(0.0));

    let grid = ccembed_core::ProductGrid::new(vec![ccembed_core::Axis::closed(8, 0.0, 1.0), ccembed_core::Axis::closed(8, 0.0, 1.0)]);
    let indefinite = SymTensorField::new(Frame::Coordinate, vec![SymMat::diag(&[1.0, -1.0]); grid.len()]);
    let rejected = matches!(optimize_embedding(&grid, &indefinite, &OptimizerConfig::default(), None), Err(Error::NotPositiveDefinite { .. }));
    t.add("indefinite G rejected by the optimizer", if rejected { 1.0 } else { 0.0 }, Bound::AtLeast(1.0));

    let bad = Builtin::from_name("scaled-disk(-1)").and_then(|b| b.spec(2));
    t.add("scaled-disk(-1) rejected", if bad.is_err() { 1.0 } else { 0.0 }, Bound::AtLeast(1.0));
    t.rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        assert_eq!(Suite::from_name("negative-controls"), Some(Suite::NegativeControls));
        assert_eq!(Suite::from_name("nope"), None);
    }

    #[test]
    fn invariants_pass() {
        let rows = run_suite(Suite::Invariants);
        assert!(rows.iter().all(SuiteRow::passed), "{}", render_table(&rows));
    }

    #[test]
    fn negative_controls_pass() {
        let rows = run_suite(Suite::NegativeControls);
        assert!(rows.iter().all(SuiteRow::passed), "{}", render_table(&rows));
    }
}
