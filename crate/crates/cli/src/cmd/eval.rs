//! Performance metrics across runs and the SPM cross-joint analysis.

use std::path::{Path, PathBuf};

use hdemg::estimator::postprocess;
use hdemg::evalspm::{cmcjd, movement_cjd, mpcc, segment_movements, wfd_frames, CjdResult, PerformanceReport, MOVEMENT_NODES, SPM_ALPHA};
use hdemg::kinematics::{HandModel, N_JOINTS};
use hdemg::plot::{BoxPlot, LinePlot, Series};
use hdemg::stats::{self, paired_t, shapiro_wilk, Alternative, TestReport};
use hdemg::{Error, Result};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::common::{ensure_dir, load_config, read_angle_table, relative_to, skeleton, write_json, write_text, AngleTable, Manifest};
use crate::Common;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "default_condition")]
    pub condition: String,
    #[serde(default)]
    pub subject: String,
    pub actual: PathBuf,
    pub predicted: PathBuf,
}

fn default_condition() -> String {
    "default".into()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Hypothesis {
    /// One-tailed: condition `a` has higher MPCC and lower MD.
    ABetter,
    TwoSided,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSpec {
    pub a: String,
    pub b: String,
    pub hypothesis: Hypothesis,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub runs: Vec<RunSpec>,
    pub comparisons: Vec<ComparisonSpec>,
}

#[derive(Debug, Serialize)]
struct RunReport {
    condition: String,
    subject: String,
    #[serde(flatten)]
    performance: PerformanceReport,
}

#[derive(Debug, Serialize)]
struct ConditionSummary {
    condition: String,
    n: usize,
    mean_mpcc: f64,
    sd_mpcc: f64,
    mean_md_mm: f64,
    sd_md_mm: f64,
    shapiro_mpcc: Option<TestReport>,
    shapiro_md: Option<TestReport>,
}

#[derive(Debug, Serialize)]
struct ComparisonReport {
    a: String,
    b: String,
    hypothesis: Hypothesis,
    subjects: Vec<String>,
    mpcc: TestReport,
    md: TestReport,
}

fn load_pair(actual: &Path, predicted: &Path) -> Result<(AngleTable, AngleTable)> {
    let a = read_angle_table(actual)?;
    let p = read_angle_table(predicted)?;
    if a.angles.dim() != p.angles.dim()
        || a.timestamps.iter().zip(&p.timestamps).any(|(x, y)| (x - y).abs() > 1e-6)
    {
        return Err(Error::Shape(format!(
            "{} and {} do not cover the same time points",
            actual.display(),
            predicted.display()
        )));
    }
    Ok((a, p))
}

pub fn evaluate(common: &Common, actual: Option<&Path>, predicted: Option<&Path>, skeleton_path: Option<&Path>) -> Result<()> {
    let cfg_path = common.config.as_deref();
    let mut cfg: EvaluateConfig = load_config(cfg_path)?;
    for r in &mut cfg.runs {
        r.actual = relative_to(cfg_path, &r.actual);
        r.predicted = relative_to(cfg_path, &r.predicted);
    }
    match (actual, predicted) {
        (Some(a), Some(p)) => cfg.runs.push(RunSpec {
            condition: default_condition(),
            subject: String::new(),
            actual: a.to_path_buf(),
            predicted: p.to_path_buf(),
        }),
        (None, None) => {}
        _ => return Err(Error::Config("--actual and --predicted must be given together".into())),
    }
    if cfg.runs.is_empty() {
        return Err(Error::Config("nothing to evaluate: give --actual/--predicted or runs in the config".into()));
    }
    let model = HandModel::<f64>::new(&skeleton(skeleton_path)?)?;
    let rest = model.rest_pose();
    let mut manifest = Manifest::new("evaluate", &serde_json::json!({ "comparisons": cfg.comparisons }), None)?;
    let mut runs = Vec::with_capacity(cfg.runs.len());
    for r in &cfg.runs {
        manifest.input(&r.actual)?;
        manifest.input(&r.predicted)?;
        let (a, p) = load_pair(&r.actual, &r.predicted)?;
        let corr = mpcc(a.angles.view(), p.angles.view())?;
        let fa = postprocess(a.angles.view(), &rest, &model)?;
        let fp = postprocess(p.angles.view(), &rest, &model)?;
        let dist = wfd_frames(&fa, &fp)?;
        runs.push(RunReport {
            condition: r.condition.clone(),
            subject: r.subject.clone(),
            performance: PerformanceReport::new(corr, &dist),
        });
    }
    let mut conditions: Vec<String> = Vec::new();
    for r in &runs {
        if !conditions.contains(&r.condition) {
            conditions.push(r.condition.clone());
        }
    }
    let pick = |c: &str, f: fn(&RunReport) -> f64| -> Vec<f64> { runs.iter().filter(|r| r.condition == c).map(f).collect() };
    let get_mpcc: fn(&RunReport) -> f64 = |r| r.performance.correlation.mpcc;
    let get_md: fn(&RunReport) -> f64 = |r| r.performance.md_mm;
    let summaries: Vec<ConditionSummary> = conditions
        .iter()
        .map(|c| {
            let (m, d) = (pick(c, get_mpcc), pick(c, get_md));
            ConditionSummary {
                condition: c.clone(),
                n: m.len(),
                mean_mpcc: stats::mean(&m),
                sd_mpcc: stats::std_dev(&m),
                mean_md_mm: stats::mean(&d),
                sd_md_mm: stats::std_dev(&d),
                shapiro_mpcc: shapiro_wilk(&m).ok(),
                shapiro_md: shapiro_wilk(&d).ok(),
            }
        })
        .collect();
    let mut comparisons = Vec::new();
    for c in &cfg.comparisons {
        let subjects: Vec<String> = runs
            .iter()
            .filter(|r| r.condition == c.a)
            .map(|r| r.subject.clone())
            .filter(|s| runs.iter().any(|r| r.condition == c.b && &r.subject == s))
            .collect();
        if subjects.len() < 2 {
            return Err(Error::Config(format!("conditions {} and {} share fewer than two subjects", c.a, c.b)));
        }
        let value = |cond: &str, s: &str, f: fn(&RunReport) -> f64| {
            runs.iter().find(|r| r.condition == cond && r.subject == s).map(f).expect("subject present")
        };
        let series = |cond: &str, f| subjects.iter().map(|s| value(cond, s, f)).collect::<Vec<f64>>();
        let (alt_mpcc, alt_md) = match c.hypothesis {
            Hypothesis::ABetter => (Alternative::Greater, Alternative::Less),
            Hypothesis::TwoSided => (Alternative::TwoSided, Alternative::TwoSided),
        };
        comparisons.push(ComparisonReport {
            a: c.a.clone(),
            b: c.b.clone(),
            hypothesis: c.hypothesis,
            mpcc: paired_t(&series(&c.a, get_mpcc), &series(&c.b, get_mpcc), alt_mpcc)?,
            md: paired_t(&series(&c.a, get_md), &series(&c.b, get_md), alt_md)?,
            subjects,
        });
    }
    let out = &common.out;
    ensure_dir(out)?;
    write_json(
        &out.join("report.json"),
        &serde_json::json!({ "runs": runs, "conditions": summaries, "comparisons": comparisons }),
    )?;
    let mut csv = String::from("condition,subject,mpcc,md_mm\n");
    for r in &runs {
        csv.push_str(&format!("{},{},{},{}\n", r.condition, r.subject, r.performance.correlation.mpcc, r.performance.md_mm));
    }
    write_text(&out.join("runs.csv"), &csv)?;
    for (name, label, f) in [("mpcc", "MPCC", get_mpcc), ("md", "MD (mm)", get_md)] {
        let plot = BoxPlot {
            title: label.into(),
            y_label: label.into(),
            groups: conditions.iter().map(|c| (c.clone(), pick(c, f))).collect(),
        };
        write_text(&out.join(format!("{name}.svg")), &plot.render())?;
    }
    manifest.finish(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectPair {
    pub actual: PathBuf,
    pub predicted: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionSpec {
    pub name: String,
    pub subjects: Vec<SubjectPair>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpmConfig {
    pub alpha: f64,
    pub nodes: usize,
    pub conditions: Vec<ConditionSpec>,
}

impl Default for SpmConfig {
    fn default() -> Self {
        Self { alpha: SPM_ALPHA, nodes: MOVEMENT_NODES, conditions: Vec::new() }
    }
}

#[derive(Debug, Serialize)]
struct JointSpm {
    joint: usize,
    t_crit: f64,
    fwhm: f64,
    dof: usize,
    min_f: f64,
    zero_variance_nodes: usize,
}

#[derive(Debug, Serialize)]
struct MovementSpm {
    movement_id: usize,
    pose_id: usize,
    joints: Vec<JointSpm>,
}

/// Signed angle errors per subject, cut into resampled movements: `[subject][movement]` of `nodes x 29`.
fn movements(spec: &ConditionSpec, nodes: usize, manifest: &mut Manifest) -> Result<(Vec<Vec<Array2<f64>>>, Vec<usize>)> {
    let mut all = Vec::with_capacity(spec.subjects.len());
    let mut poses: Option<Vec<usize>> = None;
    for s in &spec.subjects {
        manifest.input(&s.actual)?;
        manifest.input(&s.predicted)?;
        let (a, p) = load_pair(&s.actual, &s.predicted)?;
        if a.schedule.is_empty() {
            return Err(Error::InvalidInput(format!("{}: no prompt schedule next to the angles", s.actual.display())));
        }
        let ids: Vec<usize> = a.schedule.iter().map(|e| e.pose_id).collect();
        match &poses {
            Some(prev) if prev.len() != ids.len() => {
                return Err(Error::Shape(format!("condition {}: subjects differ in movement count", spec.name)));
            }
            None => poses = Some(ids),
            _ => {}
        }
        let diff = &a.angles - &p.angles;
        all.push(segment_movements(diff.view(), &a.timestamps, &a.schedule, nodes)?);
    }
    Ok((all, poses.unwrap_or_default()))
}

pub fn spm(common: &Common, alpha: Option<f64>, nodes: Option<usize>) -> Result<()> {
    let cfg_path = common.config.as_deref();
    let mut cfg: SpmConfig = load_config(cfg_path)?;
    cfg.alpha = alpha.unwrap_or(cfg.alpha);
    cfg.nodes = nodes.unwrap_or(cfg.nodes);
    if cfg.conditions.is_empty() {
        return Err(Error::Config("the config lists no conditions".into()));
    }
    for c in &mut cfg.conditions {
        if c.subjects.len() < 3 {
            return Err(Error::Config(format!("condition {} needs at least three subjects", c.name)));
        }
        for s in &mut c.subjects {
            s.actual = relative_to(cfg_path, &s.actual);
            s.predicted = relative_to(cfg_path, &s.predicted);
        }
    }
    let mut manifest = Manifest::new("spm", &serde_json::json!({ "alpha": cfg.alpha, "nodes": cfg.nodes }), None)?;
    let out = &common.out;
    ensure_dir(out)?;
    let mut cjds: Vec<Vec<CjdResult>> = Vec::new();
    let mut pose_ids = Vec::new();
    for c in &cfg.conditions {
        let (subjects, poses) = movements(c, cfg.nodes, &mut manifest)?;
        let mut per_movement = Vec::with_capacity(poses.len());
        let mut details = Vec::with_capacity(poses.len());
        for (m, &pose_id) in poses.iter().enumerate() {
            let per_joint: Vec<Array2<f64>> = (0..N_JOINTS)
                .map(|j| Array2::from_shape_fn((cfg.nodes, subjects.len()), |(i, s)| subjects[s][m][[i, j]]))
                .collect();
            let (cjd, spms) = movement_cjd(&per_joint, m, cfg.alpha)?;
            details.push(MovementSpm {
                movement_id: m,
                pose_id,
                joints: spms
                    .iter()
                    .enumerate()
                    .map(|(j, s)| JointSpm {
                        joint: j,
                        t_crit: s.t_crit,
                        fwhm: s.fwhm,
                        dof: s.dof,
                        min_f: s.f_series.iter().copied().fold(f64::INFINITY, f64::min),
                        zero_variance_nodes: s.zero_variance_nodes.len(),
                    })
                    .collect(),
            });
            per_movement.push(cjd);
        }
        let mut csv = String::from("movement,node,cjd_mean,cjd_iqr\n");
        for r in &per_movement {
            for (i, (m, q)) in r.mean_series.iter().zip(&r.iqr_series).enumerate() {
                csv.push_str(&format!("{},{i},{m},{q}\n", r.movement_id));
            }
        }
        write_text(&out.join(format!("cjd_{}.csv", c.name)), &csv)?;
        write_json(&out.join(format!("spm_{}.json", c.name)), &details)?;
        cjds.push(per_movement);
        pose_ids = poses;
    }
    let n_mov = cjds[0].len();
    if cjds.iter().any(|c| c.len() != n_mov) {
        return Err(Error::Shape("conditions differ in movement count".into()));
    }
    let cm = if cjds.len() == 2 { Some(cmcjd(&cjds[0], &cjds[1])?) } else { None };
    write_json(
        &out.join("spm_summary.json"),
        &serde_json::json!({
            "conditions": cfg.conditions.iter().map(|c| &c.name).collect::<Vec<_>>(),
            "movements": n_mov,
            "cmcjd": cm,
        }),
    )?;
    let x: Vec<f64> = (0..cfg.nodes).map(|i| 100.0 * i as f64 / (cfg.nodes - 1) as f64).collect();
    for m in 0..n_mov {
        let series = cfg
            .conditions
            .iter()
            .zip(&cjds)
            .map(|(c, r)| {
                let r = &r[m];
                let lo = r.mean_series.iter().zip(&r.iqr_series).map(|(a, q)| a - q / 2.0).collect();
                let hi = r.mean_series.iter().zip(&r.iqr_series).map(|(a, q)| a + q / 2.0).collect();
                Series { name: c.name.clone(), x: x.clone(), y: r.mean_series.clone(), band: Some((lo, hi)) }
            })
            .collect();
        let plot = LinePlot {
            title: format!("Movement {} (pose {})", m + 1, pose_ids.get(m).copied().unwrap_or(m)),
            x_label: "movement (%)".into(),
            y_label: "CJD".into(),
            series,
            hlines: vec![0.0],
            ..Default::default()
        };
        write_text(&out.join(format!("cjd_movement_{:02}.svg", m + 1)), &plot.render())?;
    }
    manifest.finish(out)
}
