//! One function per subcommand: build the library inputs, run, write.

use std::io::Write;
use std::path::Path;

use anyhow::Result;
use bridge_stein::bounds::{
    bound_constant_speed, bound_homogeneous, bound_reversible, bound_scheme, estimate_bound_nonhomogeneous,
    BoundReport, EstimatorSettings, HomogeneousBound,
};
use bridge_stein::chain::{
    simulate_hypercube_chain, simulate_lattice_chain, simulate_nonhomogeneous_chain, simulate_poisson_diag_chain,
    simulate_scheme_chain, BirthMajorant, ChainModel,
};
use bridge_stein::config::{AnyConfig, HypercubeConfig, LatticeConfig};
use bridge_stein::coupling::{estimate_contraction, CouplingModel, StartSpec};
use bridge_stein::filtering::{bound_filtering, DriftSpec, LinearModel, MonteCarloParams, ObservationPath};
use bridge_stein::oracles::{
    sample_nonhomogeneous_bridge_mh, sample_scheme_many, BridgeLaw, BridgeSampler, IntegerLaw, MhSettings,
};
use bridge_stein::rates::JumpRates;
use bridge_stein::rng::{derive_seed, replica_rng};
use bridge_stein::stats::RunningStats;
use bridge_stein::wasserstein::{empirical_w1, SampleSet};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BoundArgs, BoundVariant, Command, CoupleArgs, Family, FilteringArgs, Format, ModelArgs, ModelKind, SampleArgs,
    SampleMode, SchemeCheckArgs, StartKind, WassersteinArgs,
};
use crate::config_file::ConfigError;
use crate::output::{self, Provenance};

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub fn run(command: &Command) -> Result<()> {
    let provenance = Provenance::new(command);
    match command {
        Command::Sample(a) => sample(a, &provenance),
        Command::Couple(a) => couple(a, &provenance),
        Command::Wasserstein(a) => wasserstein(a, &provenance),
        Command::Bound(a) => bound(a, &provenance),
        Command::SchemeCheck(a) => scheme_check(a, &provenance),
        Command::Filtering(a) => filtering(a, &provenance),
    }
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(output::open(path)?)
}

fn rates(model: &ModelArgs) -> JumpRates {
    match model.family {
        Family::Reversible => JumpRates::reversible_with_increment(model.kappa),
        Family::ConstantSpeed => JumpRates::constant_speed_alternating(model.rho),
    }
}

fn chain_model(model: &ModelArgs) -> ChainModel {
    match model.model {
        ModelKind::Hypercube => ChainModel::Hypercube { alpha: model.alpha },
        ModelKind::Lattice => ChainModel::Lattice { j_plus: model.j_plus, j_minus: model.j_minus },
        ModelKind::Scheme => ChainModel::Scheme { n: model.n },
        ModelKind::PoissonDiag => ChainModel::PoissonDiag { lambda: model.lambda },
        ModelKind::Nonhomogeneous => {
            ChainModel::Nonhomogeneous { rates: rates(model), majorant: BirthMajorant::default() }
        }
    }
}

fn sample(a: &SampleArgs, provenance: &Provenance) -> Result<()> {
    let default_format = if a.mode == SampleMode::Chain { Format::Csv } else { Format::Jsonl };
    let format = a.format.unwrap_or(default_format);
    if format == Format::Json || (format == Format::Csv && a.mode != SampleMode::Chain) {
        return Err(config_error(format!("format {format:?} is not available for {:?} sampling", a.mode)));
    }
    let seed = a.common.seed;
    let mut out = open(a.common.output.as_deref())?;
    let out = out.as_mut();
    match a.mode {
        SampleMode::Chain => {
            let rows = chain_model(&a.model).ensemble(a.t_end, a.replicas, seed)?;
            match format {
                Format::Csv => output::write_csv(out, provenance, rows)?,
                _ => output::write_jsonl(out, provenance, rows)?,
            }
        }
        SampleMode::Trajectory => {
            let m = &a.model;
            match m.model {
                ModelKind::Hypercube => {
                    let t = simulate_hypercube_chain(HypercubeConfig::empty(), m.alpha, a.t_end, seed)?;
                    output::write_jsonl(out, provenance, t.events)?
                }
                ModelKind::Lattice => {
                    let t = simulate_lattice_chain(LatticeConfig::empty(), m.j_plus, m.j_minus, a.t_end, seed)?;
                    output::write_jsonl(out, provenance, t.events)?
                }
                ModelKind::Scheme => {
                    let t = simulate_scheme_chain(LatticeConfig::empty(), m.n, a.t_end, seed)?;
                    output::write_jsonl(out, provenance, t.events)?
                }
                ModelKind::Nonhomogeneous => {
                    let t = simulate_nonhomogeneous_chain(
                        LatticeConfig::empty(),
                        rates(m),
                        BirthMajorant::default(),
                        a.t_end,
                        seed,
                    )?;
                    output::write_jsonl(out, provenance, t.events)?
                }
                ModelKind::PoissonDiag => {
                    let t = simulate_poisson_diag_chain(0, m.lambda, a.t_end, seed)?;
                    output::write_jsonl(out, provenance, t.events)?
                }
            }
        }
        SampleMode::Bridge => {
            let m = &a.model;
            let draws: Vec<Value> = match m.model {
                ModelKind::Hypercube => bridge_draws(BridgeLaw::Hypercube { alpha: m.alpha }, a.count, seed)?,
                ModelKind::Lattice => {
                    bridge_draws(BridgeLaw::Lattice { j_plus: m.j_plus, j_minus: m.j_minus }, a.count, seed)?
                }
                ModelKind::Scheme => sample_scheme_many(m.n, a.count, seed)?
                    .into_iter()
                    .map(|c| serde_json::to_value(c).expect("configurations serialize"))
                    .collect(),
                ModelKind::PoissonDiag => {
                    let law = IntegerLaw::poisson_diag(m.lambda)?;
                    let mut rng = replica_rng(seed, 0);
                    (0..a.count).map(|_| json!({ "n": law.sample(&mut rng) })).collect()
                }
                ModelKind::Nonhomogeneous => {
                    let settings = MhSettings::default();
                    let iterations = (a.count * settings.thinning).max(1000);
                    let run = sample_nonhomogeneous_bridge_mh(&rates(m), iterations, settings, &mut replica_rng(seed, 0))?;
                    run.samples
                        .into_iter()
                        .take(a.count)
                        .map(|c| serde_json::to_value(c).expect("configurations serialize"))
                        .collect()
                }
            };
            output::write_jsonl(out, provenance, draws)?
        }
    }
    Ok(())
}

fn bridge_draws(law: BridgeLaw, count: usize, seed: u64) -> Result<Vec<Value>> {
    Ok(BridgeSampler::new(law)?
        .sample_many(count, seed)
        .into_iter()
        .map(|c| serde_json::to_value(c).expect("configurations serialize"))
        .collect())
}

#[derive(Serialize)]
struct ContractionRow {
    t: f64,
    mean_d: f64,
    se: f64,
    bound_4exp_half_plus_exp: f64,
}

fn couple(a: &CoupleArgs, provenance: &Provenance) -> Result<()> {
    let (model, empty): (CouplingModel, AnyConfig) = match a.model.model {
        ModelKind::Hypercube => (CouplingModel::Hypercube { alpha: a.model.alpha }, HypercubeConfig::empty().into()),
        ModelKind::Lattice => (
            CouplingModel::Lattice { j_plus: a.model.j_plus, j_minus: a.model.j_minus },
            LatticeConfig::empty().into(),
        ),
        other => return Err(config_error(format!("no coupling is available for model {other:?}"))),
    };
    let start = match a.start {
        StartKind::Stationary => StartSpec::Stationary,
        StartKind::Fixed => StartSpec::Fixed { v: empty, r: a.r, s: a.s },
    };
    let points = estimate_contraction(&model, &start, &a.t_grid, a.replicas, a.common.seed)?;
    let rows = points.into_iter().map(|p| ContractionRow {
        t: p.t,
        mean_d: p.mean_d,
        se: p.se,
        bound_4exp_half_plus_exp: p.bound,
    });
    output::write_csv(open(a.common.output.as_deref())?.as_mut(), provenance, rows)?;
    Ok(())
}

/// A law to draw configurations from, parsed from `kind:key=value,...`.
#[derive(Debug, Clone, Copy, PartialEq)]
enum LawSpec {
    Bridge(BridgeLaw),
    Scheme(usize),
}

impl LawSpec {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut params = std::collections::BTreeMap::new();
        for pair in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("law parameter `{pair}` is not `key=value`")))?;
            params.insert(k.trim().replace('-', "_"), v.trim().to_string());
        }
        let num = |key: &str, default: f64| -> Result<f64, ConfigError> {
            params.get(key).map_or(Ok(default), |v| {
                v.parse().map_err(|_| ConfigError(format!("law parameter {key} = `{v}` is not a number")))
            })
        };
        let allowed: &[&str] = match kind.trim() {
            "hypercube" => &["alpha"],
            "lattice" => &["j_plus", "j_minus"],
            "scheme" => &["n"],
            other => return Err(ConfigError(format!("unknown law `{other}`; use hypercube, lattice or scheme"))),
        };
        if let Some(k) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(ConfigError(format!("law `{}` has no parameter `{k}`", kind.trim())));
        }
        Ok(match kind.trim() {
            "hypercube" => LawSpec::Bridge(BridgeLaw::Hypercube { alpha: num("alpha", 1.0)? }),
            "lattice" => LawSpec::Bridge(BridgeLaw::Lattice { j_plus: num("j_plus", 1.0)?, j_minus: num("j_minus", 1.0)? }),
            _ => {
                let n = num("n", 10.0)?;
                if n.fract() != 0.0 || n < 0.0 {
                    return Err(ConfigError(format!("scheme block count must be an integer, got {n}")));
                }
                LawSpec::Scheme(n as usize)
            }
        })
    }

    fn draw(&self, n: usize, seed: u64) -> Result<SampleSet> {
        Ok(match *self {
            LawSpec::Bridge(law) => SampleSet::new(BridgeSampler::new(law)?.sample_many(n, seed))?,
            LawSpec::Scheme(blocks) => {
                SampleSet::new(sample_scheme_many(blocks, n, seed)?.into_iter().map(AnyConfig::from).collect())?
            }
        })
    }
}

#[derive(Serialize)]
struct Repetition {
    w1: f64,
    se: f64,
}

/// Mean W1 over independent repetitions; the standard error of the mean
/// combines the per-repetition bootstrap errors.
fn repeated_w1(
    left: LawSpec,
    right: LawSpec,
    n: usize,
    repetitions: usize,
    bootstrap: usize,
    seed: u64,
) -> Result<(f64, f64, Vec<Repetition>)> {
    if repetitions == 0 || n == 0 {
        return Err(config_error("need at least one repetition and one draw per side"));
    }
    let mut reps = Vec::with_capacity(repetitions);
    for rep in 0..repetitions as u64 {
        let a = left.draw(n, derive_seed(seed, 3 * rep))?;
        let b = right.draw(n, derive_seed(seed, 3 * rep + 1))?;
        let est = empirical_w1(&a, &b, bootstrap, derive_seed(seed, 3 * rep + 2))?;
        reps.push(Repetition { w1: est.w1, se: est.se });
    }
    let k = repetitions as f64;
    let mean = reps.iter().map(|r| r.w1).sum::<f64>() / k;
    let se = reps.iter().map(|r| r.se * r.se).sum::<f64>().sqrt() / k;
    Ok((mean, se, reps))
}

fn wasserstein(a: &WassersteinArgs, provenance: &Provenance) -> Result<()> {
    let left = LawSpec::parse(&a.left)?;
    let right = LawSpec::parse(&a.right)?;
    let (w1, se, reps) = repeated_w1(left, right, a.n, a.repetitions, a.bootstrap, a.common.seed)?;
    let result = json!({
        "w1": w1,
        "se": se,
        "n": a.n,
        "repetitions": a.repetitions,
        "per_repetition": reps,
    });
    output::write_json(open(a.common.output.as_deref())?.as_mut(), provenance, &result)?;
    Ok(())
}

fn required<T: Copy>(value: Option<T>, flag: &str, variant: &str) -> Result<T> {
    value.ok_or_else(|| config_error(format!("the {variant} bound needs --{flag}")))
}

fn bound_report(a: &BoundArgs) -> Result<BoundReport> {
    Ok(match a.variant {
        BoundVariant::PoissonDiag => bound_homogeneous(&HomogeneousBound::PoissonDiag {
            lambda: required(a.lambda, "lambda", "poisson-diag")?,
            mu: required(a.mu, "mu", "poisson-diag")?,
        })?,
        BoundVariant::Hypercube => {
            bound_homogeneous(&HomogeneousBound::Hypercube { alpha: a.alpha.clone(), beta: a.beta.clone() })?
        }
        BoundVariant::Lattice => {
            let lens = [a.j_plus.len(), a.j_minus.len(), a.h_plus.len(), a.h_minus.len()];
            if lens.iter().any(|&l| l != lens[0]) {
                return Err(config_error(format!(
                    "--j-plus, --j-minus, --h-plus and --h-minus need equal lengths, got {lens:?}"
                )));
            }
            let pairs = |x: &[f64], y: &[f64]| x.iter().copied().zip(y.iter().copied()).collect();
            bound_homogeneous(&HomogeneousBound::Lattice {
                j: pairs(&a.j_plus, &a.j_minus),
                h: pairs(&a.h_plus, &a.h_minus),
            })?
        }
        BoundVariant::Reversible => bound_reversible(required(a.kappa, "kappa", "reversible")?)?,
        BoundVariant::ConstantSpeed => bound_constant_speed(
            required(a.mu, "mu", "constant-speed")?,
            required(a.nu, "nu", "constant-speed")?,
        )?,
        BoundVariant::Scheme => bound_scheme(required(a.n, "n", "scheme")?)?,
        BoundVariant::Nonhomogeneous => {
            let rates = match a.family {
                Family::Reversible => {
                    JumpRates::reversible_with_increment(required(a.kappa, "kappa", "nonhomogeneous")?)
                }
                Family::ConstantSpeed => JumpRates::constant_speed_alternating(a.rho),
            };
            estimate_bound_nonhomogeneous(
                &rates,
                EstimatorSettings { samples: a.samples, chains: a.chains },
                a.common.seed,
            )?
        }
    })
}

fn bound(a: &BoundArgs, provenance: &Provenance) -> Result<()> {
    let report = bound_report(a)?;
    output::write_json(open(a.common.output.as_deref())?.as_mut(), provenance, &report)?;
    Ok(())
}

fn scheme_check(a: &SchemeCheckArgs, provenance: &Provenance) -> Result<()> {
    let bound = bound_scheme(a.n)?.value;
    let walk = LawSpec::Bridge(BridgeLaw::Lattice { j_plus: 1.0, j_minus: 1.0 });
    let (w1, se, reps) =
        repeated_w1(LawSpec::Scheme(a.n), walk, a.samples, a.repetitions, a.bootstrap, a.common.seed)?;
    let worst = reps.iter().map(|r| r.w1 - 2.0 * r.se).fold(f64::NEG_INFINITY, f64::max);
    let rows = ChainModel::Scheme { n: a.n }.ensemble(a.t_end, a.replicas, derive_seed(a.common.seed, u64::MAX))?;
    let ups: RunningStats = rows.iter().map(|r| r.t_end_state_size as f64).collect();
    let limit = 1.0 / (1.0 - 2.0 / a.n as f64);
    let result = json!({
        "n": a.n,
        "bound": bound,
        "w1": w1,
        "se": se,
        "repetitions": a.repetitions,
        "max_w1_minus_2se": worst,
        "w1_within_bound": worst <= bound,
        "mean_up_jumps": ups.mean(),
        "mean_up_jumps_se": ups.std_error(),
        "mean_up_jumps_limit": limit,
        "mean_within_limit": ups.mean() <= limit + 3.0 * ups.std_error(),
        "per_repetition": reps,
    });
    output::write_json(open(a.common.output.as_deref())?.as_mut(), provenance, &result)?;
    Ok(())
}

/// Reads a two-column `t,z` CSV. `#` lines are comments and a first row
/// that does not parse as numbers is taken as a header.
pub fn read_observations(path: &Path) -> Result<ObservationPath> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| config_error(format!("cannot read observations {}: {e}", path.display())))?;
    let (mut grid, mut values) = (Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| config_error(format!("observations {}: {e}", path.display())))?;
        if record.len() != 2 {
            return Err(config_error(format!("observation row {} needs two columns, got {}", i + 1, record.len())));
        }
        match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
            (Ok(t), Ok(z)) => {
                grid.push(t);
                values.push(z);
            }
            _ if i == 0 => continue,
            _ => return Err(config_error(format!("observation row {} is not numeric", i + 1))),
        }
    }
    ObservationPath::new(grid, values).map_err(|e| config_error(format!("observations {}: {e}", path.display())))
}

fn filtering(a: &FilteringArgs, provenance: &Provenance) -> Result<()> {
    let model = LinearModel::new(a.alpha, a.horizon)?;
    let drift = DriftSpec::new(a.b0, a.k, a.gamma, a.m)?;
    let z = match &a.observations {
        Some(path) => read_observations(path)?,
        None => ObservationPath::zero(a.horizon, a.observation_points)?,
    };
    let mc = MonteCarloParams { grid_size: a.grid_size, replicas: a.replicas, seed: a.common.seed };
    let report = bound_filtering(&model, &z, &drift, &mc)?;
    output::write_json(open(a.common.output.as_deref())?.as_mut(), provenance, &report)?;
    Ok(())
}
