use num_bigint::BigInt;
use psidir::classify::{approximable_verdicts, dirichlet_verdicts, product_criterion, Summary};
use psidir::construct::build_counterexample_capped;
use psidir::lattice::{
    cross_validate, dani_check, dani_r, dani_s0, dani_time, delta, direct_witness_check,
    dynamical_verdicts, geometric_s_grid, Dimensions, LatticeError,
};
use psidir::measure::{
    a_n_set, asymptotic_check, gauss_map_orbit_cf, lambda_a_n_enclosure, levy_growth_probe,
    main_series, mixing_probe, monte_carlo_zero_one, preimage, IntervalUnion, MonteCarloConfig,
    PreimageOptions,
};
use psidir::{parse_rational, Precision, Rational};
use serde_json::{json, Value};

use crate::input::{
    parse_matrix, parse_psi, parse_rational_pair, parse_rationals, parse_u64s, parse_union,
    parse_window,
};
use crate::report::{
    big, cf_state, classification, csv_string, enc, opt_rat, rat, rats, summary, Envelope,
};
use crate::{Command, Format};

/// A-sets are listed and measured exactly only up to this threshold.
const AN_LISTING_CAP: u64 = 10_000;

pub struct Context {
    pub prec: Precision,
    pub format: Format,
}

pub struct Output {
    pub text: String,
    /// Set when a decision was requested but the outcome stayed indeterminate.
    pub undecided: Option<String>,
}

pub enum Failure {
    Precondition(String),
    /// A certified disagreement between independent criteria.
    Inconsistent(String),
    Runtime(String),
}

impl Failure {
    pub fn message(&self) -> &str {
        match self {
            Failure::Precondition(m) | Failure::Inconsistent(m) | Failure::Runtime(m) => m,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            Failure::Precondition(_) => 2,
            Failure::Inconsistent(_) | Failure::Runtime(_) => 1,
        }
    }
}

impl From<String> for Failure {
    fn from(m: String) -> Self {
        Failure::Precondition(m)
    }
}

fn pre<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Precondition(e.to_string())
}

fn lattice_failure(e: LatticeError) -> Failure {
    match e {
        LatticeError::InconsistencyFound(m) => Failure::Inconsistent(m),
        LatticeError::PrecisionExhausted(_) | LatticeError::EnumerationTooLarge(_) => {
            Failure::Runtime(e.to_string())
        }
        other => pre(other),
    }
}

type CmdResult = Result<Output, Failure>;

fn emit(env: &Envelope, result: Value) -> Output {
    Output {
        text: serde_json::to_string_pretty(&env.render(result)).expect("serializable") + "\n",
        undecided: None,
    }
}

fn json_only(ctx: &Context, command: &str) -> Result<(), Failure> {
    if ctx.format == Format::Csv {
        return Err(Failure::Precondition(format!(
            "{command} has nested output; CSV is available for asymptotics and montecarlo"
        )));
    }
    Ok(())
}

pub fn run(command: &Command, ctx: &Context) -> CmdResult {
    match command {
        Command::Classify(a) => classify(a, ctx, false),
        Command::Approx(a) => classify(a, ctx, true),
        Command::Product(a) => product(a, ctx),
        Command::Construct(a) => construct(a, ctx),
        Command::Series(a) => series(a, ctx),
        Command::AnMeasure(a) => an_measure(a, ctx),
        Command::Asymptotics(a) => asymptotics(a, ctx),
        Command::Orbit(a) => orbit(a, ctx),
        Command::Preimage(a) => preimage_cmd(a, ctx),
        Command::Mixing(a) => mixing(a, ctx),
        Command::Montecarlo(a) => montecarlo(a, ctx),
        Command::Levy(a) => levy(a, ctx),
        Command::DaniR(a) => dani(a, ctx),
        Command::Delta(a) => delta_cmd(a, ctx),
        Command::DynClassify(a) => dyn_classify(a, ctx),
        Command::Witness(a) => witness(a, ctx),
        Command::CrossValidate(a) => cross(a, ctx),
    }
}

fn classify(a: &crate::ClassifyArgs, ctx: &Context, approx: bool) -> CmdResult {
    let name = if approx { "approx" } else { "classify" };
    json_only(ctx, name)?;
    let cf = a.x.resolve()?;
    let psi = parse_psi(&a.psi)?;
    let window = match &a.window {
        Some(w) => parse_window(w)?,
        None => (1, cf.depth().max(1)),
    };
    let report = if approx {
        approximable_verdicts(&cf, &psi, window, ctx.prec)
    } else {
        dirichlet_verdicts(&cf, &psi, window, ctx.prec)
    }
    .map_err(pre)?;
    let mut env = Envelope::new(if approx { "approx" } else { "classify" }, ctx.prec.bits);
    env.param("x", a.x.describe())
        .param("psi", psi.to_string())
        .param("window", json!([window.0, window.1]))
        .param("retries", ctx.prec.retries);
    let mut out = emit(
        &env,
        json!({
            "depth": cf.depth(),
            "report": classification(&report),
        }),
    );
    if a.decide && report.summary == Summary::Inconclusive {
        out.undecided = Some("summary is Inconclusive".into());
    }
    Ok(out)
}

fn product(a: &crate::ProductArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "product")?;
    let cf = a.x.resolve()?;
    let psi = parse_psi(&a.psi)?;
    let window = match &a.window {
        Some(w) => parse_window(w)?,
        None => (1, cf.depth().saturating_sub(1).max(1)),
    };
    let rows = (window.0..=window.1)
        .map(|n| {
            let v = product_criterion(&cf, &psi, n, ctx.prec).map_err(pre)?;
            Ok(json!({
                "n": v.n,
                "product": big(&v.product),
                "threshold": enc(&v.threshold),
                "outcome": format!("{:?}", v.outcome),
            }))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut env = Envelope::new("product", ctx.prec.bits);
    env.param("x", a.x.describe())
        .param("psi", psi.to_string())
        .param("window", json!([window.0, window.1]));
    Ok(emit(&env, json!({ "verdicts": rows })))
}

fn construct(a: &crate::ConstructArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "construct")?;
    let psi = parse_psi(&a.psi)?;
    let cf = build_counterexample_capped(&psi, a.depth, ctx.prec, a.entry_bit_cap).map_err(pre)?;
    let mut env = Envelope::new("construct", ctx.prec.bits);
    env.param("psi", psi.to_string())
        .param("depth", a.depth)
        .param("entry_bit_cap", a.entry_bit_cap);
    Ok(emit(&env, cf_state(&cf)))
}

fn series(a: &crate::SeriesArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "series")?;
    let psi = parse_psi(&a.psi)?;
    let rep = main_series(&psi, a.n_max, ctx.prec.bits).map_err(pre)?;
    let sums: Vec<Value> = rep
        .partial_sums
        .iter()
        .map(|(n, s)| json!({"n": n, "sum": enc(s)}))
        .collect();
    let mut env = Envelope::new("series", ctx.prec.bits);
    env.param("psi", psi.to_string()).param("n_max", a.n_max);
    Ok(emit(
        &env,
        json!({
            "start": rep.start,
            "analytic_class": rep.analytic_class.to_string(),
            "reason": rep.reason,
            "full_measure": rep.full_measure(),
            "partial_sums": sums,
        }),
    ))
}

fn union_json(u: &IntervalUnion, bits: u32, list: bool) -> Value {
    let mut v = json!({
        "count": u.len(),
        "lebesgue": rat(&u.lebesgue()),
        "gauss": enc(&u.gauss(bits)),
    });
    if list {
        v["intervals"] = u
            .parts()
            .iter()
            .map(|(lo, hi)| json!([rat(lo), rat(hi)]))
            .collect();
    }
    v
}

fn an_measure(a: &crate::AnMeasureArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "an-measure")?;
    let big_psi = parse_rational(&a.big_psi)?;
    let lambda = lambda_a_n_enclosure(&big_psi).map_err(pre)?;
    let mut result = json!({ "lambda": enc(&lambda) });
    if big_psi <= Rational::from_integer(AN_LISTING_CAP.into()) {
        let set = a_n_set(&big_psi).map_err(pre)?;
        result["set"] = union_json(&set, ctx.prec.bits, a.intervals);
        result["complement"] = union_json(&set.complement(), ctx.prec.bits, a.intervals);
    } else if a.intervals {
        return Err(Failure::Precondition(format!(
            "intervals are listed only for Psi <= {AN_LISTING_CAP}"
        )));
    }
    let mut env = Envelope::new("an-measure", ctx.prec.bits);
    env.param("big_psi", rat(&big_psi));
    Ok(emit(&env, result))
}

fn asymptotics(a: &crate::AsymptoticsArgs, ctx: &Context) -> CmdResult {
    let values = parse_rationals(&a.values)?;
    let rows = asymptotic_check(&values, ctx.prec.bits).map_err(pre)?;
    if ctx.format == Format::Csv {
        let table: Vec<Vec<String>> = rows
            .iter()
            .map(|r| {
                vec![
                    r.big_psi.to_string(),
                    r.lambda.lo().to_string(),
                    r.lambda.hi().to_string(),
                    r.lambda_exact
                        .as_ref()
                        .map_or(String::new(), |x| x.to_string()),
                    r.ratio.lo().to_string(),
                    r.ratio.hi().to_string(),
                    format!("~{}", r.ratio.approx()),
                ]
            })
            .collect();
        let header = [
            "big_psi",
            "lambda_lo",
            "lambda_hi",
            "lambda_exact",
            "ratio_lo",
            "ratio_hi",
            "ratio_approx_decimal",
        ];
        return Ok(Output {
            text: csv_string(&header, &table)?,
            undecided: None,
        });
    }
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            json!({
                "big_psi": rat(&r.big_psi),
                "lambda": enc(&r.lambda),
                "lambda_exact": opt_rat(&r.lambda_exact),
                "ratio": enc(&r.ratio),
            })
        })
        .collect();
    let mut env = Envelope::new("asymptotics", ctx.prec.bits);
    env.param("values", rats(&values));
    Ok(emit(&env, json!({ "rows": json_rows })))
}

fn orbit(a: &crate::OrbitArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "orbit")?;
    let cf = a.x.resolve()?;
    // a terminal expansion reaches 0 after `depth` steps and stops there
    let steps = a
        .steps
        .min(cf.depth().saturating_sub(usize::from(cf.is_terminal())));
    let states = gauss_map_orbit_cf(&cf, steps).map_err(pre)?;
    let points: Vec<Value> = states
        .iter()
        .enumerate()
        .map(|(j, s)| {
            json!({
                "step": j,
                "value": s.value().as_ref().map_or(Value::Null, rat),
                "cylinder": enc(s.cylinder()),
                "leading_entry": s.entries().first().map_or(Value::Null, big),
            })
        })
        .collect();
    let mut env = Envelope::new("orbit", ctx.prec.bits);
    env.param("x", a.x.describe()).param("steps", a.steps);
    Ok(emit(
        &env,
        json!({ "steps_taken": steps, "truncated": steps < a.steps, "orbit": points }),
    ))
}

fn preimage_cmd(a: &crate::PreimageArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "preimage")?;
    let u = parse_union(&a.union)?;
    let opts = PreimageOptions {
        branches: a.branches,
        max_intervals: a.max_intervals,
    };
    let res = preimage(&u, a.iterations, opts);
    let mut env = Envelope::new("preimage", ctx.prec.bits);
    env.param("union", a.union.clone())
        .param("iterations", a.iterations)
        .param("branches", a.branches)
        .param("max_intervals", a.max_intervals);
    Ok(emit(
        &env,
        json!({
            "input": union_json(&u, ctx.prec.bits, false),
            "preimage": union_json(&res.union, ctx.prec.bits, a.intervals),
            "lebesgue_defect": rat(&res.lebesgue_defect),
            "gauss_defect": rat(&res.gauss_defect),
        }),
    ))
}

fn mixing(a: &crate::MixingArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "mixing")?;
    let word = parse_u64s(&a.word)?;
    let target = parse_union(&a.target)?;
    let opts = PreimageOptions {
        branches: a.branches,
        max_intervals: a.max_intervals,
    };
    let rep = mixing_probe(&word, &target, a.gap, opts, ctx.prec.bits).map_err(pre)?;
    let mut env = Envelope::new("mixing", ctx.prec.bits);
    env.param("word", json!(word))
        .param("target", a.target.clone())
        .param("gap", a.gap)
        .param("branches", a.branches)
        .param("max_intervals", a.max_intervals);
    Ok(emit(
        &env,
        json!({
            "mu_cylinder": enc(&rep.mu_cylinder),
            "mu_target": enc(&rep.mu_target),
            "mu_intersection": enc(&rep.mu_intersection),
            "relative_deviation": enc(&rep.ratio),
        }),
    ))
}

fn montecarlo(a: &crate::MonteCarloArgs, ctx: &Context) -> CmdResult {
    let psi = parse_psi(&a.psi)?;
    let window = parse_window(&a.window)?;
    let cfg = MonteCarloConfig {
        samples: a.samples,
        window,
        seed: a.seed,
        sample_bits: a.sample_bits,
        precision: ctx.prec,
    };
    let rep = monte_carlo_zero_one(&psi, cfg);
    if ctx.format == Format::Csv {
        let header = [
            "psi",
            "seed",
            "samples",
            "window_lo",
            "window_hi",
            "no_violation",
            "with_violation",
            "indeterminate_samples",
            "indeterminate_verdicts",
            "short_prefix",
            "fraction",
            "fraction_approx_decimal",
        ];
        let row = vec![
            psi.to_string(),
            a.seed.to_string(),
            a.samples.to_string(),
            window.0.to_string(),
            window.1.to_string(),
            rep.no_violation.to_string(),
            rep.with_violation.to_string(),
            rep.indeterminate_samples.to_string(),
            rep.indeterminate_verdicts.to_string(),
            rep.short_prefix.to_string(),
            rep.fraction().to_string(),
            format!("~{}", rep.fraction_f64()),
        ];
        return Ok(Output {
            text: csv_string(&header, &[row])?,
            undecided: None,
        });
    }
    let mut env = Envelope::new("montecarlo", ctx.prec.bits);
    env.seed = Some(a.seed);
    env.param("psi", psi.to_string())
        .param("samples", a.samples)
        .param("window", json!([window.0, window.1]))
        .param("sample_bits", a.sample_bits)
        .param("retries", ctx.prec.retries);
    Ok(emit(
        &env,
        json!({
            "no_violation": rep.no_violation,
            "with_violation": rep.with_violation,
            "indeterminate_samples": rep.indeterminate_samples,
            "indeterminate_verdicts": rep.indeterminate_verdicts,
            "short_prefix": rep.short_prefix,
            "fraction": rat(&rep.fraction()),
            "fraction_approx_decimal": format!("~{}", rep.fraction_f64()),
        }),
    ))
}

fn levy(a: &crate::LevyArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "levy")?;
    let rep = levy_growth_probe(a.samples, a.depth, a.seed);
    let mut env = Envelope::new("levy", ctx.prec.bits);
    env.seed = Some(a.seed);
    env.param("samples", a.samples).param("depth", a.depth);
    // floating statistics: reported as approximate decimals
    Ok(emit(
        &env,
        json!({
            "log_q_over_n_approx": {
                "min": format!("~{}", rep.min),
                "mean": format!("~{}", rep.mean),
                "max": format!("~{}", rep.max),
            },
            "empirical_b_approx": format!("~{}", rep.empirical_b),
            "lower_bound_certified": rep.lower_bound_certified,
            "lower_bound_failures": rep.lower_bound_failures,
        }),
    ))
}

fn dims(m: usize, n: usize) -> Result<Dimensions, Failure> {
    Dimensions::new(m, n).map_err(pre)
}

fn dani(a: &crate::DaniRArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "dani-r")?;
    let psi = parse_psi(&a.psi)?;
    let d = dims(a.m, a.n)?;
    let grid = parse_rationals(&a.s)?;
    let bits = ctx.prec.bits;
    let s0 = dani_s0(&psi, d, bits).map_err(lattice_failure)?;
    let rows = grid
        .iter()
        .map(|s| {
            let r = dani_r(&psi, d, s, bits).map_err(lattice_failure)?;
            let t = dani_time(s, &r, d, bits);
            Ok(json!({"s": rat(s), "r": enc(&r), "t": enc(&t)}))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut result = json!({ "s0": enc(&s0), "values": rows });
    let sorted = grid.windows(2).all(|w| w[0] < w[1]);
    if grid.len() > 1 && sorted {
        let check = dani_check(&psi, d, &grid, bits).map_err(lattice_failure)?;
        result["time_increasing"] = check.time_increasing.into();
        result["scale_nondecreasing"] = check.scale_nondecreasing.into();
    }
    let mut env = Envelope::new("dani-r", ctx.prec.bits);
    env.param("psi", psi.to_string())
        .param("m", a.m)
        .param("n", a.n)
        .param("s", rats(&grid));
    Ok(emit(&env, result))
}

fn delta_cmd(a: &crate::DeltaArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "delta")?;
    let y = parse_matrix(&a.y, a.m, a.n)?;
    let grid = parse_rationals(&a.s)?;
    let rows = grid
        .iter()
        .map(|s| {
            let d = delta(&y, s, ctx.prec.bits).map_err(lattice_failure)?;
            Ok(json!({
                "s": rat(s),
                "delta": enc(&d.enclosure),
                "minimizer": d.minimizer.iter().map(big).collect::<Vec<_>>(),
                "enumerated": d.enumerated,
            }))
        })
        .collect::<Result<Vec<_>, Failure>>()?;
    let mut env = Envelope::new("delta", ctx.prec.bits);
    env.param("y", rats(y.entries()))
        .param("m", a.m)
        .param("n", a.n)
        .param("s", rats(&grid));
    Ok(emit(&env, json!({ "values": rows })))
}

fn dyn_classify(a: &crate::DynClassifyArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "dyn-classify")?;
    let y = parse_matrix(&a.y, a.m, a.n)?;
    let psi = parse_psi(&a.psi)?;
    let grid = match (&a.s_grid, &a.s_range) {
        (Some(g), _) => parse_rationals(g)?,
        (None, Some(r)) => {
            let (lo, hi) = parse_rational_pair(r)?;
            if !(Rational::from_integer(BigInt::from(0)) < lo && lo < hi) {
                return Err(Failure::Precondition(
                    "s range must satisfy 0 < lo < hi".into(),
                ));
            }
            geometric_s_grid(&lo, &hi, a.count)
        }
        (None, None) => return Err(Failure::Precondition("give --s-grid or --s-range".into())),
    };
    let rep = dynamical_verdicts(&y, &psi, &grid, ctx.prec).map_err(lattice_failure)?;
    let verdicts: Vec<Value> = rep
        .verdicts
        .iter()
        .map(|v| {
            json!({
                "s": rat(&v.s),
                "status": v.status.to_string(),
                "delta": enc(&v.delta),
                "r": enc(&v.r),
                "bits": v.bits,
            })
        })
        .collect();
    let mut env = Envelope::new("dyn-classify", ctx.prec.bits);
    env.param("y", rats(y.entries()))
        .param("m", a.m)
        .param("n", a.n)
        .param("psi", psi.to_string())
        .param("s_grid", rats(&grid))
        .param("retries", ctx.prec.retries);
    let mut out = emit(
        &env,
        json!({
            "summary_grid_positions": summary(&rep.summary),
            "verdicts": verdicts,
        }),
    );
    if a.decide && rep.summary == Summary::Inconclusive {
        out.undecided = Some("summary is Inconclusive".into());
    }
    Ok(out)
}

fn witness(a: &crate::WitnessArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "witness")?;
    let y = parse_matrix(&a.y, a.m, a.n)?;
    let psi = parse_psi(&a.psi)?;
    let (t0, t1) = parse_rational_pair(&a.horizon)?;
    let rep = direct_witness_check(&y, &psi, (&t0, &t1), ctx.prec).map_err(lattice_failure)?;
    let intervals: Vec<Value> = rep
        .intervals
        .iter()
        .map(|w| {
            json!({
                "q": w.record.q.iter().map(big).collect::<Vec<_>>(),
                "start": big(&w.record.start),
                "r": rat(&w.record.r),
                "inner": opt_rat(&w.inner),
                "outer": opt_rat(&w.outer),
                "nonempty": w.nonempty,
            })
        })
        .collect();
    let mut env = Envelope::new("witness", ctx.prec.bits);
    env.param("y", rats(y.entries()))
        .param("m", a.m)
        .param("n", a.n)
        .param("psi", psi.to_string())
        .param("horizon", json!([rat(&t0), rat(&t1)]));
    let mut out = emit(
        &env,
        json!({
            "covered": rep.covered,
            "gaps": rep.gaps.iter().map(enc).collect::<Vec<_>>(),
            "uncertain": rep.uncertain.iter().map(enc).collect::<Vec<_>>(),
            "intervals": intervals,
        }),
    );
    if a.decide && !rep.covered && rep.gaps.is_empty() {
        out.undecided = Some("coverage neither certified nor refuted".into());
    }
    Ok(out)
}

fn cross(a: &crate::CrossValidateArgs, ctx: &Context) -> CmdResult {
    json_only(ctx, "cross-validate")?;
    let cf = a.x.resolve()?;
    let psi = parse_psi(&a.psi)?;
    let window = match &a.window {
        Some(w) => parse_window(w)?,
        None => (2.min(cf.depth().max(1)), cf.depth().clamp(1, 30)),
    };
    let grid = a.s_grid.as_deref().map(parse_rationals).transpose()?;
    let rep =
        cross_validate(&cf, &psi, window, grid.as_deref(), ctx.prec).map_err(lattice_failure)?;
    let checks: Vec<Value> = rep
        .checks
        .iter()
        .map(|c| {
            json!({
                "index": c.index,
                "s": opt_rat(&c.s),
                "t": enc(&c.t),
                "cf": c.cf.to_string(),
                "dynamical": c.dynamical.map(|s| s.to_string()),
                "witness": c.witness.to_string(),
            })
        })
        .collect();
    let mut env = Envelope::new("cross-validate", ctx.prec.bits);
    env.param("x", a.x.describe())
        .param("psi", psi.to_string())
        .param("window", json!([window.0, window.1]));
    if let Some(g) = &grid {
        env.param("s_grid", rats(g));
    }
    Ok(emit(
        &env,
        json!({
            "consistent": true,
            "agreements": rep.agreements,
            "skipped": rep.skipped,
            "checks": checks,
        }),
    ))
}
