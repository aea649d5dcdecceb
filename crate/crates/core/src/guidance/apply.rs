use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::problem::{GuidanceProblem, LossBreakdown, LossWeights, DEFAULT_CLEARANCE};
use crate::diffusion::{GuidanceHook, Stage};
use crate::error::{Error, Result};
use crate::motion::MotionSequence;
use crate::optim::{minimize, LbfgsConfig};

/// Which sampler quantity guidance optimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuidanceMode {
    /// The posterior mean of each step.
    #[default]
    OnMu,
    /// The clean prediction of each step.
    OnX0,
}

impl GuidanceMode {
    pub fn stage(self) -> Stage {
        match self {
            GuidanceMode::OnMu => Stage::PosteriorMean,
            GuidanceMode::OnX0 => Stage::CleanPrediction,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "on_mu" | "mu" => Some(GuidanceMode::OnMu),
            "on_x0" | "x0" => Some(GuidanceMode::OnX0),
            _ => None,
        }
    }
}

/// L-BFGS iterations per denoising step: `late` for the last `late_steps`
/// steps (`t < late_steps`), `early` before that.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationSchedule {
    pub early: usize,
    pub late: usize,
    pub late_steps: usize,
}

impl IterationSchedule {
    pub fn for_mode(mode: GuidanceMode) -> Self {
        match mode {
            GuidanceMode::OnMu => Self {
                early: 5,
                late: 10,
                late_steps: 10,
            },
            GuidanceMode::OnX0 => Self {
                early: 1,
                late: 10,
                late_steps: 10,
            },
        }
    }

    pub fn constant(k: usize) -> Self {
        Self {
            early: k,
            late: k,
            late_steps: 0,
        }
    }

    pub fn iterations(&self, t: usize) -> usize {
        if t < self.late_steps {
            self.late
        } else {
            self.early
        }
    }
}

impl Default for IterationSchedule {
    fn default() -> Self {
        Self::for_mode(GuidanceMode::OnMu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GuidanceConfig {
    pub mode: GuidanceMode,
    pub schedule: IterationSchedule,
    pub weights: LossWeights,
    /// In `OnMu` mode, also optimize the returned clean motion at `t = 0`
    /// with the late iteration count.
    pub final_x0_pass: bool,
    pub clearance: f64,
    pub memory: usize,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            mode: GuidanceMode::OnMu,
            schedule: IterationSchedule::default(),
            weights: LossWeights::default(),
            final_x0_pass: true,
            clearance: DEFAULT_CLEARANCE,
            memory: LbfgsConfig::default().memory,
        }
    }
}

impl GuidanceConfig {
    pub fn for_mode(mode: GuidanceMode) -> Self {
        Self {
            mode,
            schedule: IterationSchedule::for_mode(mode),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.clearance >= 0.0 && self.clearance.is_finite()) {
            return Err(Error::InvalidArgument("clearance must be finite and >= 0".into()));
        }
        if self.memory == 0 {
            return Err(Error::InvalidArgument("L-BFGS memory must be >= 1".into()));
        }
        Ok(())
    }

    /// Iterations this config runs at `(stage, t)`; zero where it does not act.
    pub fn iterations_at(&self, stage: Stage, t: usize) -> usize {
        if stage == self.mode.stage() {
            self.schedule.iterations(t)
        } else if stage == Stage::CleanPrediction && t == 0 && self.final_x0_pass {
            self.schedule.late
        } else {
            0
        }
    }
}

/// Outcome of one guidance call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepReport {
    pub t: usize,
    pub stage: &'static str,
    pub iterations: usize,
    pub evaluations: usize,
    pub before: LossBreakdown,
    pub after: LossBreakdown,
    pub line_search_failed: bool,
}

/// Per-call reports plus the loss after every optimizer iteration.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct GuidanceTrace {
    pub steps: Vec<StepReport>,
    /// `(t, stage, iteration, loss)`; iteration 0 is the starting loss.
    pub losses: Vec<(usize, &'static str, usize, f64)>,
}

impl GuidanceTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,stage,iteration,loss\n");
        for (t, stage, k, loss) in &self.losses {
            let _ = writeln!(out, "{t},{stage},{k},{loss:e}");
        }
        out
    }

    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations).sum()
    }
}

fn stage_name(stage: Stage) -> &'static str {
    match stage {
        Stage::CleanPrediction => "x0",
        Stage::PosteriorMean => "mu",
    }
}

/// Runs `iterations` L-BFGS iterations on the problem, updating `motions`
/// (model space) in place. The loss never increases; on line-search failure
/// the best point found is kept and the report says so.
pub fn apply_guidance(
    problem: &GuidanceProblem,
    motions: &mut [MotionSequence],
    iterations: usize,
    memory: usize,
    t: usize,
    stage: Stage,
    trace: Option<&mut GuidanceTrace>,
) -> Result<StepReport> {
    let x0 = problem.pack(motions)?;
    let mut grad = vec![0.0; x0.len()];
    let before = problem.evaluate(&x0, &mut grad)?;
    if !before.total.is_finite() {
        return Err(Error::NonFiniteLoss { step: t });
    }
    let mut report = StepReport {
        t,
        stage: stage_name(stage),
        iterations: 0,
        evaluations: 1,
        before,
        after: before,
        line_search_failed: false,
    };
    if iterations == 0 || problem.is_trivial() {
        if let Some(tr) = trace {
            tr.steps.push(report);
        }
        return Ok(report);
    }

    let mut failure = None;
    let mut objective = |x: &[f64], g: &mut [f64]| match problem.evaluate(x, g) {
        Ok(l) => l.total,
        Err(e) => {
            failure.get_or_insert(e);
            g.iter_mut().for_each(|v| *v = 0.0);
            f64::INFINITY
        }
    };
    let cfg = LbfgsConfig {
        memory,
        ..LbfgsConfig::with_iterations(iterations)
    };
    let result = minimize(&mut objective, &x0, &cfg);
    if let Some(e) = failure {
        if !result.f.is_finite() {
            return Err(e);
        }
    }
    if !result.f.is_finite() || result.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLoss { step: t });
    }
    problem.unpack(&result.x, motions);
    report.after = problem.evaluate(&result.x, &mut grad)?;
    report.iterations = result.iterations;
    report.evaluations += result.evaluations;
    report.line_search_failed = result.line_search_failed;
    if let Some(tr) = trace {
        for (k, loss) in result.history.iter().enumerate() {
            tr.losses.push((t, report.stage, k, *loss));
        }
        tr.steps.push(report);
    }
    Ok(report)
}

/// Sampler hook running guidance per the config.
///
/// The batch is split into consecutive groups, one per problem, each as long
/// as its problem's agent count.
pub struct IkGuidance<'a> {
    pub problems: Vec<GuidanceProblem<'a>>,
    pub config: GuidanceConfig,
    pub trace: GuidanceTrace,
}

impl<'a> IkGuidance<'a> {
    pub fn new(problems: Vec<GuidanceProblem<'a>>, config: GuidanceConfig) -> Result<Self> {
        config.validate()?;
        for p in &problems {
            p.validate()?;
        }
        Ok(Self {
            problems,
            config,
            trace: GuidanceTrace::default(),
        })
    }
}

impl GuidanceHook for IkGuidance<'_> {
    fn guide(&mut self, stage: Stage, batch: &mut [MotionSequence], t: usize) -> Result<()> {
        let k = self.config.iterations_at(stage, t);
        if k == 0 {
            return Ok(());
        }
        let expected: usize = self.problems.iter().map(|p| p.agents.len()).sum();
        if expected != batch.len() {
            return Err(Error::DimensionMismatch {
                what: "guided batch",
                expected,
                got: batch.len(),
            });
        }
        let mut offset = 0;
        for p in &self.problems {
            let n = p.agents.len();
            apply_guidance(p, &mut batch[offset..offset + n], k, self.config.memory, t, stage, Some(&mut self.trace))?;
            offset += n;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedules() {
        let s = IterationSchedule::for_mode(GuidanceMode::OnMu);
        assert_eq!(s.iterations(500), 5);
        assert_eq!(s.iterations(10), 5);
        assert_eq!(s.iterations(9), 10);
        assert_eq!(s.iterations(0), 10);
        let s = IterationSchedule::for_mode(GuidanceMode::OnX0);
        assert_eq!(s.iterations(990), 1);
        assert_eq!(s.iterations(5), 10);
    }

    #[test]
    fn final_pass_only_on_mu() {
        let mu = GuidanceConfig::for_mode(GuidanceMode::OnMu);
        assert_eq!(mu.iterations_at(Stage::CleanPrediction, 3), 0);
        assert_eq!(mu.iterations_at(Stage::CleanPrediction, 0), 10);
        assert_eq!(mu.iterations_at(Stage::PosteriorMean, 3), 10);
        let x0 = GuidanceConfig::for_mode(GuidanceMode::OnX0);
        assert_eq!(x0.iterations_at(Stage::PosteriorMean, 3), 0);
        assert_eq!(x0.iterations_at(Stage::CleanPrediction, 30), 1);
    }

    #[test]
    fn csv_header() {
        let mut tr = GuidanceTrace::default();
        tr.losses.push((3, "mu", 0, 0.5));
        assert_eq!(tr.to_csv(), "t,stage,iteration,loss\n3,mu,0,5e-1\n");
    }
}
