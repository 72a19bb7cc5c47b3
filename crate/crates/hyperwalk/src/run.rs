use std::path::PathBuf;

use hyperwalk_core::exact::{distance_profile, InclusionExclusion};
use hyperwalk_core::gallery::{self, Family, Identity, TsetlinSpec};
use hyperwalk_core::glauber::{self, MonotoneSystem, SiteCoverage};
use hyperwalk_core::walk::{StoppingTimeSampler, PRNG_NAME};
use hyperwalk_core::{
    check_separating, coupling_parameters, cutoff_prediction, Arrangement, WeightedFaceSet,
};
use thiserror::Error;

use crate::config::{config_error, parse_list, ConfigError, ExperimentConfig, Mode};
use crate::format::{self, cell, FormatError, Row, Table};
use crate::parallel;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] hyperwalk_core::Error),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

type Result<T> = std::result::Result<T, RunError>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A walk given either by a named family or by a custom file.
pub enum Walk {
    Family(Family),
    Custom {
        arrangement: Box<Arrangement>,
        faces: WeightedFaceSet,
    },
}

impl Walk {
    fn explicit(&self) -> Result<(Arrangement, WeightedFaceSet)> {
        match self {
            Walk::Family(f) => Ok((f.arrangement()?, f.weighted_faces()?)),
            Walk::Custom { arrangement, faces } => {
                Ok((arrangement.as_ref().clone(), faces.clone()))
            }
        }
    }

    fn sampler(&self) -> Result<Box<dyn StoppingTimeSampler>> {
        match self {
            Walk::Family(f) => Ok(Box::new(f.sampler()?)),
            Walk::Custom { arrangement, faces } => {
                check_separating(arrangement, faces).into_result()?;
                Ok(Box::new(faces.clone()))
            }
        }
    }
}

fn card_weights(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    if let Some(w) = cfg.list_param("weights")? {
        return Ok(w);
    }
    let n = cfg.require_usize("n")?;
    if n == 0 {
        return Err(config_error("n", "must be >= 1").into());
    }
    Ok(vec![1.0 / n as f64; n])
}

/// Family from the config's name and parameters.
pub fn build_walk(cfg: &ExperimentConfig) -> Result<Walk> {
    let family = match cfg.family.as_str() {
        "tsetlin" => Family::Tsetlin(TsetlinSpec::new(card_weights(cfg)?)?),
        "riffle" => Family::Riffle {
            n: cfg.require_usize("n")?,
            a: cfg.usize_param("a")?.unwrap_or(2),
        },
        "k-to-top" => Family::KToTop {
            n: cfg.require_usize("n")?,
            k: cfg.require_usize("k")?,
        },
        "top-bottom" => Family::TopBottom {
            card_weights: card_weights(cfg)?,
        },
        "hypercube-nn" => match (cfg.list_param("plus")?, cfg.list_param("minus")?) {
            (Some(w_plus), Some(w_minus)) => Family::HypercubeNn { w_plus, w_minus },
            (None, None) => Family::hypercube_uniform(cfg.require_usize("n")?)?,
            _ => {
                return Err(config_error("plus/minus", "give both weight lists or neither").into())
            }
        },
        "hypercube-nonlocal" => Family::HypercubeNonlocal {
            n: cfg.require_usize("n")?,
            k: cfg.require_usize("k")?,
        },
        "custom" => {
            let path = cfg
                .param("file")
                .ok_or_else(|| config_error("file", "required by family `custom`"))?;
            let (arrangement, faces) = format::read_custom(path.as_ref())?;
            return Ok(Walk::Custom {
                arrangement: Box::new(arrangement),
                faces,
            });
        }
        other => {
            return Err(config_error(
                "family",
                format!("unknown family `{other}` (see `hyperwalk list`)"),
            )
            .into())
        }
    };
    family.validate()?;
    Ok(Walk::Family(family))
}

pub fn build_system(cfg: &ExperimentConfig) -> Result<MonotoneSystem> {
    let field = cfg.f64_param("field")?.unwrap_or(0.0);
    Ok(match cfg.family.as_str() {
        "ising" => glauber::ising_system(
            cfg.usize_param("width")?.unwrap_or(2),
            cfg.usize_param("height")?.unwrap_or(2),
            cfg.f64_param("beta")?.unwrap_or(0.0),
            field,
        )?,
        "product" => {
            let q = cfg.usize_param("q")?.unwrap_or(2);
            let spins = (0..q).map(|i| i as f64).collect();
            glauber::product_system(cfg.require_usize("n")?, spins, field)?
        }
        other => {
            return Err(config_error(
                "family",
                format!("`{other}` is not a spin system (use ising or product)"),
            )
            .into())
        }
    })
}

fn preamble(cfg: &ExperimentConfig, grid_text: &str) -> Vec<String> {
    vec![
        format!("hyperwalk {VERSION}"),
        format!("family={}", cfg.family),
        format!("params={}", cfg.params_line()),
        format!("mode={}", cfg.mode.as_str()),
        format!("t_grid={grid_text}"),
        format!("seed={} ({})", cfg.seed, cfg.seed_source.describe()),
        format!("trials={}", cfg.trials),
        format!("prng={PRNG_NAME}"),
    ]
}

fn grid_text(cfg: &ExperimentConfig) -> String {
    cfg.t_grid_text
        .clone()
        .unwrap_or_else(|| crate::config::DEFAULT_GRID.to_string())
}

/// Runs one experiment and returns its table.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Table> {
    match cfg.mode {
        Mode::Exact => run_exact(cfg),
        Mode::Mc => run_mc(cfg),
        Mode::Cutoff => run_cutoff(cfg),
        Mode::Bounds => run_bounds(cfg),
        Mode::Glauber => run_glauber(cfg),
    }
}

/// Runs the experiment and writes it to the configured output, or returns
/// the rendered text when no output path is set.
pub fn write_experiment(cfg: &ExperimentConfig) -> Result<Option<String>> {
    let text = run_experiment(cfg)?.render();
    match &cfg.output {
        Some(path) => {
            std::fs::write(path, &text).map_err(|source| RunError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

fn survival_column(
    walk: &Walk,
    arr: &Arrangement,
    w: &WeightedFaceSet,
    grid: &[u64],
) -> Result<Vec<f64>> {
    match InclusionExclusion::new(arr, w) {
        Ok(ie) => Ok(grid.iter().map(|&t| ie.survival(t)).collect()),
        Err(hyperwalk_core::Error::Capacity { .. })
            if matches!(walk, Walk::Family(Family::Tsetlin(_))) =>
        {
            let Walk::Family(Family::Tsetlin(spec)) = walk else {
                unreachable!()
            };
            grid.iter()
                .map(|&t| gallery::tsetlin_survival_exact(spec, t).map_err(RunError::from))
                .collect()
        }
        Err(e) => Err(e.into()),
    }
}

fn run_exact(cfg: &ExperimentConfig) -> Result<Table> {
    let walk = build_walk(cfg)?;
    let (arr, w) = walk.explicit()?;
    let grid = &cfg.t_grid;
    let t_max = *grid.last().expect("grid is nonempty");
    let profile = distance_profile(&arr, &w, t_max)?;
    let survival = survival_column(&walk, &arr, &w, grid)?;
    let rows: Vec<Row> = grid
        .iter()
        .zip(survival)
        .map(|(&t, p)| Row {
            t,
            s_exact: Some(profile.separation[t as usize]),
            tv_exact: Some(profile.total_variation[t as usize]),
            survival_exact: Some(p),
            ..Row::default()
        })
        .collect();
    let mut pre = preamble(cfg, &grid_text(cfg));
    if let Walk::Family(f) = &walk {
        pre.push(format!("identity={}", identity_tag(f.identity())));
    }
    Ok(Table::standard(pre, &[], &rows))
}

fn mc_rows(grid: &[u64], est: &hyperwalk_core::SurvivalEstimate) -> Vec<Row> {
    grid.iter()
        .enumerate()
        .map(|(i, &t)| Row {
            t,
            survival_mc: Some(est.p_hat[i]),
            mc_stderr: Some(est.std_err[i]),
            ..Row::default()
        })
        .collect()
}

fn run_mc(cfg: &ExperimentConfig) -> Result<Table> {
    let walk = build_walk(cfg)?;
    let sampler = walk.sampler()?;
    let est = parallel::estimate_survival(sampler.as_ref(), &cfg.t_grid, cfg.trials, cfg.seed)?;
    Ok(Table::standard(
        preamble(cfg, &grid_text(cfg)),
        &[],
        &mc_rows(&cfg.t_grid, &est),
    ))
}

/// `(b, d)` for the cutoff prediction; `d` is `None` when it is not the
/// same for every pair of hyperplanes.
fn coupling_for(walk: &Walk) -> Result<(f64, Option<f64>, usize)> {
    if let Walk::Family(f) = walk {
        if let Some((b, d)) = f.closed_form_coupling() {
            return Ok((b, d, f.hyperplanes()));
        }
    }
    let (arr, w) = walk.explicit()?;
    let c = coupling_parameters(&arr, &w)?;
    let b = c.uniform_b.ok_or_else(|| {
        config_error(
            "family",
            "b differs between hyperplanes; no cutoff prediction",
        )
    })?;
    Ok((b, c.uniform_d, arr.hyperplanes()))
}

fn run_cutoff(cfg: &ExperimentConfig) -> Result<Table> {
    let walk = build_walk(cfg)?;
    let (b, d, m) = coupling_for(&walk)?;
    let pred = cutoff_prediction(b, d.unwrap_or(f64::NAN), m)?;
    let (grid, text) = match &cfg.t_grid_text {
        Some(t) => (cfg.t_grid.clone(), t.clone()),
        None => {
            let lo = (pred.time - 4.0 * pred.window).max(0.0).floor() as u64;
            let hi = (pred.time + 4.0 * pred.window).ceil() as u64;
            let step = ((pred.window / 4.0).floor() as u64).max(1);
            let g: Vec<u64> = (lo..=hi).step_by(step as usize).collect();
            (g, format!("{lo}..{hi}:{step}"))
        }
    };
    let sampler = walk.sampler()?;
    let est = parallel::estimate_survival(sampler.as_ref(), &grid, cfg.trials.max(1), cfg.seed)?;
    let mut pre = preamble(cfg, &text);
    pre.push(format!("hyperplanes={m}"));
    pre.push(format!("b={}", cell(Some(b))));
    pre.push(format!(
        "d={}",
        d.map_or("non-uniform".to_string(), |d| cell(Some(d)))
    ));
    pre.push(format!("cutoff_time={}", cell(Some(pred.time))));
    pre.push(format!("window={}", cell(Some(pred.window))));
    pre.push(format!("assumptions_ok={}", pred.assumptions_ok));
    Ok(Table::standard(pre, &[], &mc_rows(&grid, &est)))
}

pub const BOUNDS_HEADER: &str = "c,t_star,upper_time,upper_value,upper_clamped,lower_time,lower_value,lower_clamped,\
                                 t_upper,survival_at_upper,survival_at_upper_stderr,t_lower,survival_at_lower,survival_at_lower_stderr";

/// `P(T > t)` at the given times: exact subset sums for small libraries,
/// one shared batch of Monte Carlo trials otherwise.
fn tsetlin_survival_at(
    spec: &TsetlinSpec,
    times: &[u64],
    trials: u64,
    seed: u64,
) -> Result<Vec<(f64, Option<f64>)>> {
    if spec.cards() <= gallery::MAX_TSETLIN_EXACT_CARDS {
        return times
            .iter()
            .map(|&t| Ok((gallery::tsetlin_survival_exact(spec, t)?, None)))
            .collect();
    }
    if trials == 0 {
        return Ok(vec![(f64::NAN, None); times.len()]);
    }
    let sampler = Family::Tsetlin(spec.clone()).sampler()?;
    let mut samples = parallel::sample_stopping_times(&sampler, trials, seed)?;
    samples.sort_unstable();
    let n = samples.len() as f64;
    Ok(times
        .iter()
        .map(|&t| {
            let p = (samples.len() - samples.partition_point(|&x| x <= t)) as f64 / n;
            (p, Some((p * (1.0 - p) / n).sqrt()))
        })
        .collect())
}

fn run_bounds(cfg: &ExperimentConfig) -> Result<Table> {
    let spec = match build_walk(cfg)? {
        Walk::Family(Family::Tsetlin(spec)) => spec,
        _ => return Err(config_error("family", "bounds mode needs family=tsetlin").into()),
    };
    let cs = parse_list("c", cfg.param("c").unwrap_or("1,2,3,4,5"))?;
    let t_star = gallery::solve_t_star(&spec);
    let mut points = Vec::new();
    for &c in &cs {
        let upper = gallery::tsetlin_upper_bound(&spec, c)?;
        let lower = gallery::tsetlin_lower_bound(&spec, c).ok();
        points.push((c, upper, lower));
    }
    // the bounds hold at real times; s is nonincreasing, so compare at
    // ceil(upper time) and floor(lower time)
    let mut times = Vec::new();
    for (_, up, low) in &points {
        times.push(up.time.ceil() as u64);
        if let Some(l) = low {
            times.push(l.time.floor() as u64);
        }
    }
    let values = tsetlin_survival_at(&spec, &times, cfg.trials, cfg.seed)?;
    let mut values = values.into_iter();
    let mut rows = Vec::new();
    let flag = |b: bool| if b { "1" } else { "0" }.to_string();
    let opt = |x: f64| cell((!x.is_nan()).then_some(x));
    for (c, up, low) in &points {
        let (su, su_se) = values.next().expect("one value per time");
        let mut row = vec![
            cell(Some(*c)),
            cell(Some(t_star)),
            cell(Some(up.time)),
            cell(Some(up.value)),
            flag(up.clamped),
        ];
        let lower_cells = match low {
            Some(l) => {
                let (sl, sl_se) = values.next().expect("one value per time");
                (
                    vec![cell(Some(l.time)), cell(Some(l.value)), flag(l.clamped)],
                    vec![(l.time.floor() as u64).to_string(), opt(sl), cell(sl_se)],
                )
            }
            None => (vec![String::new(); 3], vec![String::new(); 3]),
        };
        row.extend(lower_cells.0);
        row.extend([(up.time.ceil() as u64).to_string(), opt(su), cell(su_se)]);
        row.extend(lower_cells.1);
        rows.push(row);
    }
    let mut pre = preamble(cfg, "n/a");
    let mw = spec.min_weight();
    pre.push(format!("t_star={}", cell(Some(t_star))));
    pre.push(format!("t_star_min_w={}", cell(Some(t_star * mw))));
    pre.push(format!("t_star_min_w2={}", cell(Some(t_star * mw * mw))));
    pre.push(format!(
        "lower_bound_needs_c_below={}",
        cell(Some(t_star * mw / 2.0))
    ));
    Ok(Table {
        preamble: pre,
        header: BOUNDS_HEADER.to_string(),
        rows,
    })
}

fn run_glauber(cfg: &ExperimentConfig) -> Result<Table> {
    let sys = build_system(cfg)?;
    let grid = &cfg.t_grid;
    let t_max = *grid.last().expect("grid is nonempty");
    let profile = glauber::glauber_profile(&sys, t_max)?;
    let coverage = glauber::coverage_conditional(&sys, t_max)?;
    let pi = glauber::stationary(&sys)?;
    let pi_bottom = pi[sys.encode(&sys.bottom())];
    let n = sys.sites();
    let mc = if cfg.trials > 0 {
        Some(parallel::estimate_survival(
            &SiteCoverage { sites: n },
            grid,
            cfg.trials,
            cfg.seed,
        )?)
    } else {
        None
    };
    let rows: Vec<Row> = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| Row {
            t,
            s_exact: Some(profile.separation[t as usize]),
            tv_exact: Some(profile.total_variation[t as usize]),
            survival_exact: Some(glauber::coupon_survival_uniform(n, t)),
            survival_mc: mc.as_ref().map(|e| e.p_hat[i]),
            mc_stderr: mc.as_ref().map(|e| e.std_err[i]),
            extra: vec![
                Some(profile.top_to_bottom[t as usize]),
                coverage[t as usize],
            ],
        })
        .collect();
    let monotone = glauber::check_monotone(&sys);
    let bounds = glauber::monotone_lower_bounds(n, cfg.f64_param("c")?.unwrap_or(1.0))?;
    let mut pre = preamble(cfg, &grid_text(cfg));
    pre.push(format!("system={}", sys.name()));
    pre.push(format!("monotone={}", monotone.is_monotone()));
    if let Some(w) = &monotone.witness {
        pre.push(format!(
            "witness lower={:?} upper={:?} site={}",
            w.lower, w.upper, w.site
        ));
    }
    pre.push(format!("pi_bottom={}", cell(Some(pi_bottom))));
    pre.push(format!(
        "sep_time={} sep_bound={} tv_time={} tv_bound={}",
        cell(Some(bounds.sep_time)),
        cell(Some(bounds.sep_bound)),
        cell(Some(bounds.tv_time)),
        cell(Some(bounds.tv_bound))
    ));
    Ok(Table::standard(
        pre,
        &["top_bottom_ratio", "coverage_conditional"],
        &rows,
    ))
}

fn identity_tag(id: Identity) -> &'static str {
    match id {
        Identity::Equality => "equality s(t)=P(T>t)",
        Identity::FillEquality => "fill-equality s(t)=P(fewer than n-1 cards touched)",
        Identity::Inequality => "inequality P(T>t)<=s(t)",
    }
}

/// Family names, parameters and which identities the test suites check.
pub fn list_families() -> String {
    let rows: [(&str, &str, &str); 8] = [
        (
            "tsetlin",
            "weights=w1,..,wn | n=N",
            "fill-equality when uniform, else inequality; cutoff bounds (mode=bounds)",
        ),
        (
            "riffle",
            "n=N a=A (default 2)",
            "equality; cutoff-prediction (b,d)",
        ),
        (
            "k-to-top",
            "n=N k=K (1<=k<n)",
            "equality; cutoff-prediction (b only, d non-uniform)",
        ),
        (
            "top-bottom",
            "weights=w1,..,wn | n=N",
            "equality when uniform, else inequality",
        ),
        (
            "hypercube-nn",
            "n=N [symmetric] | plus=.. minus=..",
            "equality when w+ = w-, else inequality",
        ),
        (
            "hypercube-nonlocal",
            "n=N k=K (1<k<=n/2)",
            "equality; cutoff-prediction (b,d)",
        ),
        (
            "ising",
            "width=W height=H beta=B field=H0",
            "glauber: monotone lower bounds",
        ),
        (
            "product",
            "n=N q=Q field=H0",
            "glauber: monotone lower bounds",
        ),
    ];
    let mut out =
        String::from("family              parameters                                 checks\n");
    for (name, params, checks) in rows {
        out.push_str(&format!("{name:<20}{params:<43}{checks}\n"));
    }
    out.push_str("custom              file=PATH                                  inequality\n");
    out
}
