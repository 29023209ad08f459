//! The subcommands: each turns resolved parameters into a config of the
//! library, runs it and writes artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use alloclab::alloc_1d::walk_event_sim;
use alloclab::alloc_grid::solve_grid;
use alloclab::bounds::BoundCurve;
use alloclab::experiments::{
    box_probe, continuity_experiment, continuity_holds, finite_values, fit_tails,
    render_territories, rigidity_experiment, rigidity_holds, solve, tail_experiment,
    BoxProbeConfig, ContinuityConfig, Resolution, RigidityConfig, Solved, TailConfig,
};
use alloclab::geometry::Domain;
use alloclab::point_process::{palm_augment, sample_poisson, IncrementLaw};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::CliError;

/// A subcommand with its config keys. Every key is also a long flag.
pub struct Spec {
    pub name: &'static str,
    pub about: &'static str,
    pub keys: &'static [(&'static str, &'static str)],
    pub defaults: fn() -> Value,
}

const PHASE: [(&str, &str); 6] = [
    ("d", "dimension"),
    ("L", "side of the periodic window"),
    ("eps", "grid spacing; omit for the exact solver on the line"),
    ("alpha", "appetite"),
    ("lambda", "intensity of the centers"),
    ("seed", "base seed"),
];

macro_rules! keys {
    ($($extra:expr),* $(,)?) => {{
        const K: &[(&str, &str)] = &[PHASE[0], PHASE[1], PHASE[2], PHASE[3], PHASE[4], PHASE[5], $($extra),*];
        K
    }};
}

pub const SPECS: &[Spec] = &[
    Spec {
        name: "solve",
        about: "Solve one configuration and write its centers and allocation",
        keys: keys![("palm", "add a center at the origin")],
        defaults: || json!({"eps": null, "lambda": 1.0, "seed": 0, "palm": false}),
    },
    Spec {
        name: "tails",
        about: "Tail curve of X or R* with power-law and exponential fits",
        keys: keys![
            ("statistic", "x or r_star"),
            ("replicates", "number of replicates"),
            ("process", "JSON process description, Poisson by default"),
            ("radii", "comma-separated radii"),
        ],
        defaults: || json!({"eps": null, "lambda": 1.0, "seed": 0, "statistic": "r_star", "process": {"kind": "poisson"}, "radii": null}),
    },
    Spec {
        name: "rigidity",
        about: "Unsated frequency of the Palm center as the appetite falls to one",
        keys: &[
            PHASE[0],
            PHASE[1],
            PHASE[2],
            ("alphas", "strictly decreasing appetites above one"),
            ("replicates", "replicates per appetite"),
            PHASE[5],
        ],
        defaults: || json!({"eps": null, "seed": 0}),
    },
    Spec {
        name: "continuity",
        about: "Changed mass near the origin when the far centers are resampled",
        keys: keys![
            ("halves", "increasing half-sides of the kept box"),
            ("resamples", "resamples per box"),
            ("probe_half", "half-side of the probed box"),
            (
                "threshold",
                "changed-mass fraction required at the largest box"
            ),
        ],
        defaults: || json!({"eps": null, "lambda": 1.0, "seed": 0, "probe_half": 1.0, "threshold": 0.01}),
    },
    Spec {
        name: "boxprobe",
        about: "Replete or decisive failure rates of a box under outside resampling",
        keys: keys![
            ("kind", "replete or decisive"),
            ("half", "half-side of the box"),
            ("resamples", "number of outside resamples"),
            ("edge_band", "width of the boundary stratum"),
        ],
        defaults: || json!({"eps": null, "lambda": 1.0, "seed": 0, "edge_band": 1.0}),
    },
    Spec {
        name: "walk",
        about: "Block-event probabilities of the random walk",
        keys: &[
            ("law", "JSON gap law with unit mean, exponential by default"),
            ("m_max", "largest block count"),
            ("replicates", "number of walks"),
            ("seed", "base seed"),
        ],
        defaults: || json!({"law": {"law": "exponential", "rate": 1.0}, "m_max": 4, "seed": 0}),
    },
    Spec {
        name: "render",
        about: "Picture of a planar grid allocation as a PPM image",
        keys: keys![("annulus", "width of the two-colour distance bands")],
        defaults: || json!({"d": 2, "lambda": 1.0, "seed": 0, "annulus": null}),
    },
    Spec {
        name: "bounds",
        about: "Evaluate an analytic bound curve on a grid of radii",
        keys: &[
            ("kind", "curve name, e.g. oned-r or poisson-upper"),
            ("d", "dimension, for the extreme-appetite curves"),
            ("alpha", "appetite"),
            ("gamma", "threshold ratio, for the Poisson curves"),
            ("r_max", "largest radius"),
            ("points", "number of radii"),
        ],
        defaults: || json!({"r_max": 50.0, "points": 101}),
    },
];

fn parse<T: DeserializeOwned>(params: &Map<String, Value>) -> Result<T, CliError> {
    serde_json::from_value(Value::Object(params.clone()))
        .map_err(|e| CliError::Config(e.to_string()))
}

/// The resolved parameters as the typed config sees them, with defaults
/// filled in; this is what the manifest echoes.
fn echo<T: Serialize>(cfg: &T) -> Result<Map<String, Value>, CliError> {
    match serde_json::to_value(cfg).map_err(|e| CliError::Runtime(e.to_string()))? {
        Value::Object(m) => Ok(m),
        _ => unreachable!("configs serialize to objects"),
    }
}

pub struct Artifacts {
    pub parameters: Map<String, Value>,
    pub files: Vec<String>,
}

fn create(dir: &Path, name: &str, files: &mut Vec<String>) -> Result<BufWriter<File>, CliError> {
    let path = dir.join(name);
    let f = File::create(&path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    files.push(name.to_string());
    Ok(BufWriter::new(f))
}

fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    value: &T,
    files: &mut Vec<String>,
) -> Result<(), CliError> {
    let mut w = create(dir, name, files)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SolveParams {
    d: usize,
    #[serde(rename = "L")]
    side: f64,
    eps: Option<f64>,
    alpha: f64,
    lambda: f64,
    seed: u64,
    palm: bool,
}

#[derive(Serialize, Deserialize)]
struct ContinuityParams {
    #[serde(flatten)]
    cfg: ContinuityConfig,
    threshold: f64,
}

#[derive(Serialize, Deserialize)]
struct WalkParams {
    law: IncrementLaw,
    m_max: u32,
    replicates: u64,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct RenderParams {
    d: usize,
    #[serde(rename = "L")]
    side: f64,
    eps: f64,
    alpha: f64,
    lambda: f64,
    seed: u64,
    annulus: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct BoundsParams {
    #[serde(flatten)]
    curve: BoundCurve,
    r_max: f64,
    points: usize,
}

pub fn run(command: &str, params: &Map<String, Value>, dir: &Path) -> Result<Artifacts, CliError> {
    let mut files = Vec::new();
    let parameters = match command {
        "solve" => {
            let p: SolveParams = parse(params)?;
            let mut cs = sample_poisson(p.d, p.side, p.lambda, p.seed)?;
            if p.palm {
                cs = palm_augment(&cs)?;
            }
            let sol = solve(&cs, p.alpha, Resolution::from_eps(p.eps))?;
            let mut w = create(dir, "centers.json", &mut files)?;
            w.write_all(cs.to_json()?.as_bytes())?;
            w.flush()?;
            let (claimed, unsated) = match &sol {
                Solved::Line(a) => {
                    let mut w = create(dir, "allocation.json", &mut files)?;
                    w.write_all(a.to_json()?.as_bytes())?;
                    w.flush()?;
                    (
                        a.claimed_volume() / p.side,
                        a.sated.iter().filter(|s| !**s).count(),
                    )
                }
                Solved::Grid(a) => {
                    let mut w = create(dir, "allocation.bin", &mut files)?;
                    a.write_binary(&mut w)?;
                    w.flush()?;
                    let stats = a.phase_stats();
                    (
                        stats.claimed_fraction,
                        (0..cs.len()).filter(|&c| !a.is_sated(c)).count(),
                    )
                }
            };
            let summary = json!({
                "centers": cs.len(),
                "unsated_centers": unsated,
                "claimed_fraction": claimed,
                "x": sol.x(),
            });
            write_json(dir, "summary.json", &summary, &mut files)?;
            echo(&p)?
        }
        "tails" => {
            let cfg: TailConfig = parse(params)?;
            let (outcomes, est) = tail_experiment(&cfg)?;
            let mut w = create(dir, "tails.csv", &mut files)?;
            est.write_csv(&mut w)?;
            w.flush()?;
            match fit_tails(&finite_values(&outcomes), &est) {
                Ok(fits) => write_json(dir, "fit.json", &fits, &mut files)?,
                Err(e) => log::warn!("no tail fit: {e}"),
            }
            let summary = json!({
                "replicates": est.replicates,
                "finite": est.n,
                "excluded": est.excluded,
                "finite_fraction": est.finite_fraction(),
            });
            write_json(dir, "summary.json", &summary, &mut files)?;
            echo(&cfg)?
        }
        "rigidity" => {
            let cfg: RigidityConfig = parse(params)?;
            let points = rigidity_experiment(&cfg)?;
            let report = json!({"points": points, "holds": rigidity_holds(&points)});
            write_json(dir, "rigidity.json", &report, &mut files)?;
            echo(&cfg)?
        }
        "continuity" => {
            let p: ContinuityParams = parse(params)?;
            let points = continuity_experiment(&p.cfg)?;
            let report = json!({"points": points, "holds": continuity_holds(&points, p.threshold)});
            write_json(dir, "continuity.json", &report, &mut files)?;
            echo(&p)?
        }
        "boxprobe" => {
            let cfg: BoxProbeConfig = parse(params)?;
            write_json(dir, "boxprobe.json", &box_probe(&cfg)?, &mut files)?;
            echo(&cfg)?
        }
        "walk" => {
            let p: WalkParams = parse(params)?;
            write_json(
                dir,
                "walk.json",
                &walk_event_sim(&p.law, p.m_max, p.replicates, p.seed)?,
                &mut files,
            )?;
            echo(&p)?
        }
        "render" => {
            let p: RenderParams = parse(params)?;
            let dom = Domain::new(p.d, p.side, p.eps)?;
            let cs = sample_poisson(p.d, p.side, p.lambda, p.seed)?;
            let img = render_territories(&solve_grid(&cs, p.alpha, &dom)?, p.annulus)?;
            let mut w = create(dir, "territories.ppm", &mut files)?;
            img.write_ppm(&mut w)?;
            w.flush()?;
            echo(&p)?
        }
        "bounds" => {
            let p: BoundsParams = parse(params)?;
            if p.r_max.is_nan() || p.r_max <= 0.0 || p.points < 2 {
                return Err(CliError::Config(
                    "need r_max > 0 and at least two points".into(),
                ));
            }
            let radii: Vec<f64> = (0..p.points)
                .map(|k| p.r_max * k as f64 / (p.points - 1) as f64)
                .collect();
            let mut w = create(dir, "bounds.csv", &mut files)?;
            p.curve.write_csv(&radii, &mut w)?;
            w.flush()?;
            echo(&p)?
        }
        other => return Err(CliError::Config(format!("unknown command {other}"))),
    };
    Ok(Artifacts { parameters, files })
}
