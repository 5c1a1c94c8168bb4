//! The staged pipeline: rescale, check the hypothesis, build the collar and the
//! bdf, embed `G`, compose into half-space and verify.

use ccembed_core::bdf::{
    assemble_bdf, assemble_g, choose_epsilon, compute_phi, flow_collar, make_cutoff, AdjustedTensorG, BdfProfile, CutoffKind,
    FlowOptions, NormalFormData, ProfileBdf, CONSISTENCY_TOL, IDENTITY_TOL,
};
use ccembed_core::compose::{
    compose, induced_curvature_inequality, pullback_halfspace, verify_p_embedding, PEmbedding, VerifyTolerances,
};
use ccembed_core::curvature::{curvature_limit_scan, kappa_field, CurvatureOptions, KappaInfinityField, PlaneFamily};
use ccembed_core::embed::{optimize_embedding, OptimizedEmbedding, OptimizerConfig};
use ccembed_core::{BoundaryGrid, Error, MetricSpec};

use crate::config::{ConfigError, PipelineConfig};
use crate::report::{Bound, StageRecord, Verdict, VerificationReport};

/// Where a run stops; the subcommands map onto these.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum StopAfter {
    Kappa,
    Bdf,
    Embed,
    Full,
}

/// Radii of the boundary limit scans.
pub const LIMIT_RADII: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

/// Relative tolerance of the rescaling cross-check.
pub const RESCALE_TOL: f64 = 1e-12;

/// Agreement required between `kappa_inf` computed from the reference bdf and
/// from the constructed one.
pub const COHERENCE_TOL: f64 = 1e-8;

/// Every intermediate field the run produced, for export.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub spec: MetricSpec,
    /// `lambda^2 g`.
    pub scaled: MetricSpec,
    pub boundary: BoundaryGrid,
    /// `kappa_inf` of the input metric.
    pub kappa: Option<KappaInfinityField>,
    /// `(family, [(r, error)])` for the first boundary node.
    pub limit_scans: Vec<(PlaneFamily, Vec<(f64, f64)>)>,
    pub normal_form: Option<NormalFormData>,
    pub profile: Option<BdfProfile>,
    pub adjusted: Option<AdjustedTensorG>,
    pub embedding: Option<OptimizedEmbedding>,
    pub pembedding: Option<PEmbedding>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub report: VerificationReport,
    pub artifacts: Artifacts,
}

struct Run {
    stages: Vec<StageRecord>,
    hypothesis: bool,
    not_converged: bool,
}

impl Run {
    fn push(&mut self, s: StageRecord) -> bool {
        let ok = s.passed();
        self.stages.push(s);
        ok
    }

    /// Records a core error on the stage; hypothesis violations set the verdict.
    fn fail(&mut self, mut s: StageRecord, e: Error) {
        if let Error::HypothesisViolation { node, k2 } = &e {
            self.hypothesis = true;
            s.notes.push(format!("offending boundary node {node:?}, K^2 of lambda^2 g = {k2:.12e}"));
        }
        s.error = Some(e.to_string());
        self.stages.push(s);
    }
}

fn node_label(spec: &MetricSpec, boundary: &BoundaryGrid, j: usize) -> String {
    let n = &boundary.nodes[j];
    let k2 = spec.k2(&n.point).map(|v| format!("{v:.12e}")).unwrap_or_else(|e| e.to_string());
    format!("boundary node {j} params {:?} point {:?}, K^2 of lambda^2 g = {k2}", n.params, n.point)
}

fn ratio_samples(eps: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| (k as f64 + 0.5) * eps / n as f64).collect()
}

/// Runs the pipeline up to `stop`. Core failures become stage errors in the
/// report; only configuration problems are returned as `Err`.
pub fn run_pipeline(cfg: &PipelineConfig, stop: StopAfter) -> Result<PipelineOutcome, ConfigError> {
    cfg.validate()?;
    let spec = cfg.metric_spec()?;
    let lambda = cfg.lambda;
    let l2 = lambda * lambda;
    let scaled = spec.scaled(l2);
    let boundary = spec.manifold().boundary_grid(0, cfg.bdf.boundary_nodes)?;
    let title = match &cfg.metric.builtin {
        Some(name) => format!("{name}, lambda = {lambda}"),
        None => format!("custom metric, lambda = {lambda}"),
    };
    let mut art = Artifacts {
        spec: spec.clone(),
        scaled: scaled.clone(),
        boundary: boundary.clone(),
        kappa: None,
        limit_scans: Vec::new(),
        normal_form: None,
        profile: None,
        adjusted: None,
        embedding: None,
        pembedding: None,
    };
    let mut run = Run { stages: Vec::new(), hypothesis: false, not_converged: false };
    stages(cfg, stop, &spec, &scaled, &boundary, &mut art, &mut run);

    let verdict = if run.hypothesis {
        Verdict::HypothesisViolation
    } else if run.not_converged {
        Verdict::NotConverged
    } else if run.stages.iter().all(StageRecord::passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(PipelineOutcome { report: VerificationReport { title, stages: run.stages, verdict }, artifacts: art })
}

fn stages(
    cfg: &PipelineConfig,
    stop: StopAfter,
    spec: &MetricSpec,
    scaled: &MetricSpec,
    boundary: &BoundaryGrid,
    art: &mut Artifacts,
    run: &mut Run,
) {
    let lambda = cfg.lambda;
    let l2 = lambda * lambda;

    // kappa_inf of g and of lambda^2 g
    let mut s = StageRecord::new("kappa");
    let kappa = match kappa_field(spec, spec.reference_bdf(), &boundary.nodes) {
        Ok(k) => k,
        Err(e) => return run.fail(s, e),
    };
    let kappa_scaled = match kappa_field(scaled, scaled.reference_bdf(), &boundary.nodes) {
        Ok(k) => k,
        Err(e) => return run.fail(s, e),
    };
    let rescale = kappa
        .values
        .iter()
        .zip(&kappa_scaled.values)
        .map(|(k, ks)| (ks - k / l2).abs() / (k / l2).abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    s.measure("rescaling_rel_error", rescale, Bound::AtMost(RESCALE_TOL));
    s.measure("kappa_max", kappa.max(), Bound::Above(-l2));
    let hypothesis = s.measure("kappa_min", kappa.min(), Bound::Above(-l2));
    if !hypothesis {
        run.hypothesis = true;
        let (j, _) = kappa.values.iter().enumerate().fold((0, f64::INFINITY), |a, (j, &v)| if v < a.1 { (j, v) } else { a });
        s.notes.push(format!("kappa_inf <= -lambda^2 at {}", node_label(scaled, boundary, j)));
    }
    if stop == StopAfter::Kappa {
        let opts = CurvatureOptions::default();
        for family in [PlaneFamily::Normal, PlaneFamily::Tangential] {
            match curvature_limit_scan(spec, &boundary.nodes[0], family, &LIMIT_RADII, &opts) {
                Ok(scan) => {
                    let text: Vec<String> = scan.iter().map(|(r, e)| format!("{r}: {e:.3e}")).collect();
                    s.notes.push(format!("limit scan {family:?} at node 0: {}", text.join(", ")));
                    art.limit_scans.push((family, scan));
                }
                Err(e) => s.notes.push(format!("limit scan {family:?} skipped: {e}")),
            }
        }
    }
    art.kappa = Some(kappa.clone());
    if !run.push(s) || stop == StopAfter::Kappa {
        return;
    }

    // collar normal form and epsilon
    let s = StageRecord::new("collar");
    let opts = FlowOptions::default();
    let eps_request = cfg.bdf.epsilon;
    let n_r = cfg.bdf.collar_nodes;
    let first = match flow_collar(scaled, boundary, eps_request, n_r, &opts) {
        Ok(nf) => nf,
        Err(e) => return run.fail(s, e),
    };
    let eps = match choose_epsilon(&first, cfg.bdf.margin) {
        Ok(eps) => eps,
        Err(e) => return run.fail(s, e),
    };
    let nf = if eps == eps_request {
        first
    } else {
        match flow_collar(scaled, boundary, eps, n_r, &opts) {
            Ok(nf) => nf,
            Err(e) => return run.fail(s, e),
        }
    };
    let mut s = s;
    s.measure("epsilon", eps, Bound::AtMost(eps_request));
    let k2_max = nf.fine_k2.iter().flat_map(|f| f.iter().copied()).fold(f64::NEG_INFINITY, f64::max);
    s.measure("collar_k2_max", k2_max, Bound::Below(1.0));
    s.measure("flow_defect", nf.max_flow_defect, Bound::AtMost(opts.flow_tol));
    s.measure("cross_term", nf.max_cross_term, Bound::AtMost(opts.orthogonality_tol));
    art.normal_form = Some(nf.clone());
    if !run.push(s) {
        return;
    }

    // cutoff, phi and x
    let s = StageRecord::new("bdf");
    let cutoff = match CutoffKind::from_name(&cfg.bdf.cutoff).and_then(|k| make_cutoff(eps, k)) {
        Ok(c) => c,
        Err(e) => return run.fail(s, e),
    };
    let profile = match compute_phi(cutoff, cfg.bdf.phi_table).and_then(|p| assemble_bdf(&nf, p)) {
        Ok(p) => p,
        Err(e) => return run.fail(s, e),
    };
    let mut s = s;
    s.notes.push(format!("cutoff {}", cutoff.kind.name()));
    match profile.cutoff_identity_defect(&ratio_samples(eps, 200)) {
        Ok(d) => {
            s.measure("cutoff_identity", d, Bound::AtMost(IDENTITY_TOL));
        }
        Err(e) => return run.fail(s, e),
    }
    if let Some(xc) = profile.plateau {
        s.measure("plateau_x", xc, Bound::Above(0.0));
    }
    s.measure("boundary_dx", profile.dx(0.0), Bound::Above(cfg.verify.transversality));
    art.profile = Some(profile.clone());
    if !run.push(s) {
        return;
    }

    // G = x^2 g - dx^2
    let s = StageRecord::new("adjusted-metric");
    let g = match assemble_g(&nf, &profile) {
        Ok(g) => g,
        Err(e) => return run.fail(s, e),
    };
    let mut s = s;
    s.measure("consistency", g.max_disagreement, Bound::AtMost(CONSISTENCY_TOL));
    let min_eig = g.min_eigenvalue();
    if !s.measure("min_eigenvalue", min_eig, Bound::Above(0.0)) {
        let idx = g.min_eigenvalues.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a }).0;
        let j = idx % nf.grid.boundary.len();
        s.notes.push(format!("G degenerates at r = {}, {}", nf.grid.r_of(idx), node_label(scaled, boundary, j)));
    }
    let rr_min = g.rr_coefficient.iter().copied().fold(f64::INFINITY, f64::min);
    s.measure("rr_coefficient_min", rr_min, Bound::Above(0.0));
    art.adjusted = Some(g.clone());
    if !run.push(s) || stop == StopAfter::Bdf {
        return;
    }

    // Euclidean embedding of G
    let s = StageRecord::new("embed");
    let e = &cfg.embed;
    let ocfg = OptimizerConfig {
        ambient_dim: e.ambient_dim,
        max_iters: e.max_iters,
        stop_residual: e.stop_residual,
        seed: e.seed,
        memory: e.memory,
        perturbation: e.perturbation,
        ..OptimizerConfig::default()
    };
    let grid = nf.grid.product();
    let out = match optimize_embedding(&grid, &g.g, &ocfg, None) {
        Ok(o) => o,
        Err(err) => return run.fail(s, err),
    };
    let mut s = s;
    s.notes.push(format!("ambient dimension {}, {} iterations, objective {:.6e}", out.embedding.n, out.trace.len() - 1, out.objective));
    if !s.measure("nash_residual", out.final_residual, Bound::AtMost(e.stop_residual)) {
        run.not_converged = true;
        s.notes.push("optimizer did not reach the stop residual".into());
    }
    art.embedding = Some(out.clone());
    run.push(s);
    if stop == StopAfter::Embed {
        return;
    }

    // U = (x, v) into half-space
    let s = StageRecord::new("isometry");
    let u = match compose(&profile, &nf.grid, out.embedding, lambda) {
        Ok(u) => u,
        Err(err) => return run.fail(s, err),
    };
    let iso = match pullback_halfspace(&u, &g.x2g) {
        Ok(i) => i,
        Err(err) => return run.fail(s, err),
    };
    let mut s = s;
    s.measure("isometry_residual", iso.max_residual, Bound::AtMost(cfg.verify.isometry));
    art.pembedding = Some(u.clone());
    run.push(s);

    let s = StageRecord::new("p-embedding");
    let tol = VerifyTolerances { transversality: cfg.verify.transversality, immersion: cfg.verify.immersion, injectivity: cfg.verify.injectivity };
    let rep = match verify_p_embedding(&u, &g.g, &tol) {
        Ok(r) => r,
        Err(err) => return run.fail(s, err),
    };
    let mut s = s;
    s.measure("simple_b_map", if rep.simple_b_map { 1.0 } else { 0.0 }, Bound::AtLeast(1.0));
    s.measure("boundary_dx_min", rep.min_boundary_dx, Bound::Above(tol.transversality));
    s.measure("min_singular_value", rep.min_singular_value, Bound::Above(tol.immersion));
    s.measure("injectivity_ratio", rep.injectivity_ratio, Bound::Above(tol.injectivity));
    s.notes.push(format!("euclidean defect rms {:.6e}, max {:.6e}", rep.embedding.rms_rel_defect, rep.embedding.max_rel_defect));
    run.push(s);

    // induced kappa_inf against the input, through both bdfs
    let s = StageRecord::new("curvature");
    let via_x = match kappa_field(scaled, &ProfileBdf { spec: scaled, profile: &profile }, &boundary.nodes) {
        Ok(k) => k,
        Err(err) => return run.fail(s, err),
    };
    let coherence = via_x.values.iter().zip(&kappa.values).map(|(a, b)| (a * l2 - b).abs()).fold(0.0, f64::max);
    let ineq = match induced_curvature_inequality(&u, Some(&kappa.values), cfg.verify.kappa) {
        Ok(c) => c,
        Err(err) => return run.fail(s, err),
    };
    // kappa_inf = -K^2 on the boundary, K^2 of lambda^2 g from the collar data
    let minus_k2: Vec<f64> = nf.boundary_k2().iter().map(|k2| -l2 * k2).collect();
    let k2_gap = minus_k2.iter().zip(&kappa.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let induced_k2_gap = ineq.induced.iter().zip(&minus_k2).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut s = s;
    s.measure("bdf_coherence", coherence, Bound::AtMost(COHERENCE_TOL));
    s.measure("minus_k2_vs_input", k2_gap, Bound::AtMost(COHERENCE_TOL));
    s.measure("induced_vs_minus_k2", induced_k2_gap, Bound::AtMost(cfg.verify.kappa));
    s.measure("induced_kappa_min", ineq.min, Bound::AtLeast(-l2));
    s.measure("induced_kappa_max", ineq.max, Bound::AtLeast(-l2));
    s.measure("induced_vs_input", ineq.max_deviation.unwrap_or(f64::INFINITY), Bound::AtMost(cfg.verify.kappa));
    run.push(s);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(name: &str, lambda: f64) -> PipelineConfig {
        let mut c = PipelineConfig::builtin(name, lambda);
        c.bdf.collar_nodes = 12;
        c.bdf.boundary_nodes = 16;
        c
    }

    #[test]
    fn hyperbolic_disk_at_unit_scale_violates_the_hypothesis() {
        let out = run_pipeline(&small("hyperbolic-disk", 1.0), StopAfter::Full).unwrap();
        assert_eq!(out.report.verdict, Verdict::HypothesisViolation);
        let k = out.report.stage("kappa").unwrap();
        assert!(k.notes.iter().any(|n| n.contains("boundary node")));
        assert!(out.report.stage("collar").is_none());
    }

    #[test]
    fn borderline_is_degenerate() {
        let out = run_pipeline(&small("borderline", 1.0), StopAfter::Bdf).unwrap();
        // kappa_inf = -1 at y1 = 0 exactly: the strict inequality fails there
        assert_eq!(out.report.verdict, Verdict::HypothesisViolation);
        let out = run_pipeline(&small("borderline", 1.0 + 1e-9), StopAfter::Bdf).unwrap();
        let m = out.report.stage("adjusted-metric").unwrap().get("min_eigenvalue").unwrap().value;
        assert!(m < 1e-6, "{m}");
    }

    #[test]
    fn kappa_stage_records_limit_scans() {
        let out = run_pipeline(&small("scaled-disk(4)", 1.0), StopAfter::Kappa).unwrap();
        assert_eq!(out.report.verdict, Verdict::Pass);
        assert_eq!(out.artifacts.limit_scans.len(), 2);
        let k = out.artifacts.kappa.unwrap();
        assert!((k.min() + 0.25).abs() < 1e-14);
    }
}
