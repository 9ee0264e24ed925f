use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use cascade_cli::exit;
use cascade_cli::reproduce::{reproduce, Suite};
use cascade_core::aggregate::{
    extremize, martingale_check, partition_prior, pool, solve_extremizing_exponent,
    EvidenceOutcome, EvidencePartition, ForecastSet, PoolMethod,
};
use cascade_core::cascade::{
    apply_overrides, evaluate_cascade, CascadeModel, FactorValue, Overrides,
};
use cascade_core::display::{percent, percent_precise, sig};
use cascade_core::econ::{
    bill_table, concurrent_devices, devices_for_training, euv_wafer_throughput,
    flops_per_dollar_hour, implied_cagr, inference_cost_per_hour, ops_per_dollar, project_growth,
    robot_amortized_cost, robots_per_year, training_cost, BillColumn, HOURS_PER_YEAR,
};
use cascade_core::grid::{
    at_least_mass, build_joint_grid, linked_joint_expectation, scenario_expectation, QualifierRule,
};
use cascade_core::hazard::{
    annual_from_cumulative, any_of, combined_survival, cumulative_from_annual, derail_probability,
    rescale, DerailmentEvent, HorizonRisk,
};
use cascade_core::sensitivity::{
    certainty_sweeps, required_value, solve_uniform_multiplier, tornado, tornado_csv, Sweep,
};
use cascade_core::Probability;
use cascade_store::{export_report, ModelDocument, Store};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "cascade",
    version,
    about = "Conditional-probability cascade calculator"
)]
struct Cli {
    /// Output form: aligned text, comma-separated, or a JSON document.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Print full-precision numbers instead of display rounding.
    #[arg(long, global = true)]
    precise: bool,
    /// Directory holding user models and saved scenarios.
    #[arg(long, env = "CASCADE_DATA_DIR", global = true)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Doc,
}

#[derive(Subcommand)]
enum Command {
    /// Joint odds of a model, with optional overrides.
    Evaluate(ModelArgs),
    /// Compute-need by compute-efficiency grids and scenario expectations.
    #[command(subcommand)]
    Grid(GridCommand),
    /// Constant-hazard horizon conversions and derailment arithmetic.
    #[command(subcommand)]
    Hazard(HazardCommand),
    /// Cost and hardware arithmetic.
    #[command(subcommand)]
    Econ(EconCommand),
    /// Forecast pooling, extremizing, and priors.
    #[command(subcommand)]
    Aggregate(AggregateCommand),
    /// One-at-a-time sensitivity of the joint odds.
    Tornado(TornadoArgs),
    /// Uniform multiplier (or single factor value) that reaches a target.
    Solve(SolveArgs),
    /// Summary table of a model or saved scenario.
    Export(ModelArgs),
    /// Run the local HTTP service.
    Serve(ServeArgs),
    /// Check the bundled models against their published figures.
    #[command(alias = "reproduce-paper", alias = "reproduce_paper")]
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model id.
    #[arg(long, default_value = "tagi-2043", conflicts_with = "scenario")]
    model: String,
    /// Saved scenario id (its base model and overrides).
    #[arg(long)]
    scenario: Option<String>,
    /// Override a factor: `id=0.8` or `id=N/A`. Repeatable.
    #[arg(long = "set", value_name = "ID=VALUE", value_parser = parse_override)]
    overrides: Vec<(String, FactorValue)>,
}

#[derive(Args)]
struct TornadoArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sweep `id=low:high`. Repeatable; without it every applicable factor
    /// is swept from its value up to 1.
    #[arg(long = "sweep", value_name = "ID=LOW:HIGH", value_parser = parse_sweep)]
    sweeps: Vec<Sweep>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Target joint odds.
    #[arg(long, value_parser = parse_probability)]
    target: Probability,
    /// Factors to scale: `all`, a group, a subset named in the model, or `ids:a,b`.
    #[arg(long, default_value = "all", conflicts_with = "factor")]
    subset: String,
    /// Solve for the value of this one factor instead.
    #[arg(long)]
    factor: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    host: IpAddr,
    #[arg(long, env = "CASCADE_PORT", default_value_t = cascade_server::DEFAULT_PORT)]
    port: u16,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Run only these suites (comma-separated or repeated).
    #[arg(long, value_delimiter = ',')]
    only: Vec<Suite>,
    /// Read the reference models from this directory instead of the
    /// compiled-in copies.
    #[arg(long)]
    bundle_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GridCommand {
    /// Qualifying mass of a model's attached grid.
    Evaluate {
        #[arg(long, default_value = "tagi-2043")]
        model: String,
        /// Attached grid name; the first grid by default.
        #[arg(long)]
        grid: Option<String>,
        /// Dollars per hour; the grid's own rule by default.
        #[arg(long)]
        threshold: Option<f64>,
        /// Count cells at exactly the threshold as qualifying.
        #[arg(long)]
        inclusive: bool,
    },
    /// Mass at or above a bucket of a named distribution.
    AtLeast {
        #[arg(long, default_value = "tagi-2043")]
        model: String,
        #[arg(long)]
        distribution: String,
        #[arg(long)]
        index: usize,
    },
    /// Expected achievement over a need distribution; with `--linked`, the
    /// joint of two achievements driven by the same need.
    Expectation {
        #[arg(long, default_value = "tagi-2043")]
        model: String,
        #[arg(long)]
        achievement: String,
        #[arg(long)]
        linked: Option<String>,
    },
}

#[derive(Subcommand)]
enum HazardCommand {
    /// Re-express a risk over one horizon as the risk over another.
    Rescale {
        #[arg(long, value_parser = parse_probability)]
        p: Probability,
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
    },
    /// Risk over `years` from a per-year risk.
    Cumulative {
        #[arg(long, value_parser = parse_probability)]
        annual: Probability,
        #[arg(long)]
        years: f64,
    },
    /// Per-year risk from a risk over `years`.
    Annual {
        #[arg(long, value_parser = parse_probability)]
        cumulative: Probability,
        #[arg(long)]
        years: f64,
    },
    /// Chance that at least one independent event happens.
    AnyOf {
        #[arg(required = true, value_parser = parse_probability)]
        risks: Vec<Probability>,
    },
    /// Chance an event happens and delays arrival.
    Derail {
        #[arg(long, value_parser = parse_probability)]
        event: Probability,
        #[arg(long, value_parser = parse_probability)]
        delay: Probability,
    },
    /// Survival through a model's derailment events.
    Survival {
        #[arg(long, default_value = "tagi-2043")]
        model: String,
        /// Only these events (repeatable); all by default.
        #[arg(long = "event")]
        events: Vec<String>,
    },
}

#[derive(Subcommand)]
enum EconCommand {
    FlopsPerDollarHour {
        #[arg(long)]
        flops: f64,
        #[arg(long)]
        price: f64,
    },
    OpsPerDollar {
        #[arg(long)]
        flops: f64,
        #[arg(long)]
        price: f64,
    },
    /// Dollars per hour to run `flops` at an efficiency in FLOPS per dollar-hour.
    InferenceCost {
        #[arg(long)]
        flops: f64,
        #[arg(long)]
        efficiency: f64,
    },
    TrainingCost {
        #[arg(long)]
        ops: f64,
        #[arg(long)]
        ops_per_dollar: f64,
    },
    /// Devices running concurrently to supply the labor hours.
    Devices {
        #[arg(long)]
        labor_hours: f64,
        #[arg(long)]
        utilization: f64,
    },
    TrainingDevices {
        #[arg(long)]
        ops: f64,
        #[arg(long)]
        flops: f64,
        #[arg(long, default_value_t = 1.0)]
        years: f64,
    },
    /// Devices, wafers and power plants for a model's workload.
    Bill {
        #[arg(long, default_value = "tagi-2043")]
        model: String,
        #[arg(long, default_value = "lower")]
        workload: String,
    },
    Cagr {
        #[arg(long)]
        target: f64,
        #[arg(long)]
        base: f64,
        #[arg(long)]
        years: f64,
    },
    Growth {
        #[arg(long)]
        base: f64,
        #[arg(long)]
        rate: f64,
        #[arg(long)]
        years: f64,
    },
    /// Wafers per year one EUV tool can expose.
    Euv {
        #[arg(long)]
        wafers_per_hour: f64,
        #[arg(long)]
        steps: f64,
        #[arg(long)]
        uptime: f64,
        #[arg(long, default_value_t = HOURS_PER_YEAR)]
        hours: f64,
    },
    RobotCost {
        #[arg(long)]
        price: f64,
        #[arg(long)]
        lifetime_hours: f64,
    },
    RobotsPerYear {
        #[arg(long)]
        labor_hours: f64,
        #[arg(long)]
        lifetime_hours: f64,
    },
}

#[derive(Subcommand)]
enum AggregateCommand {
    Extremize {
        #[arg(long, value_parser = parse_probability)]
        p: Probability,
        #[arg(long)]
        exponent: f64,
    },
    /// Exponent that extremizes `from` into `to`.
    Exponent {
        #[arg(long, value_parser = parse_probability)]
        from: Probability,
        #[arg(long, value_parser = parse_probability)]
        to: Probability,
    },
    Pool {
        #[arg(required = true, value_parser = parse_probability)]
        forecasts: Vec<Probability>,
        #[arg(long, value_enum, default_value_t = Method::Mean)]
        method: Method,
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// Expected posterior minus prior over `probability:posterior` outcomes.
    Martingale {
        #[arg(long, value_parser = parse_probability)]
        prior: Probability,
        #[arg(long = "outcome", required = true, value_parser = parse_outcome)]
        outcomes: Vec<EvidenceOutcome>,
    },
    Prior {
        #[arg(long)]
        favorable: u64,
        #[arg(long)]
        total: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Mean,
    OddsGeometricMean,
}

fn parse_probability(s: &str) -> Result<Probability, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    Probability::new(v).map_err(|e| e.to_string())
}

fn parse_override(s: &str) -> Result<(String, FactorValue), String> {
    let (id, value) = s.split_once('=').ok_or("expected ID=VALUE")?;
    Ok((id.trim().to_string(), value.parse()?))
}

fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let (id, range) = s.split_once('=').ok_or("expected ID=LOW:HIGH")?;
    let (low, high) = range.split_once(':').ok_or("expected ID=LOW:HIGH")?;
    Ok(Sweep {
        factor_id: id.trim().to_string(),
        low: parse_probability(low)?,
        high: parse_probability(high)?,
    })
}

fn parse_outcome(s: &str) -> Result<EvidenceOutcome, String> {
    let (p, post) = s.split_once(':').ok_or("expected PROBABILITY:POSTERIOR")?;
    Ok(EvidenceOutcome {
        probability: parse_probability(p)?,
        posterior: parse_probability(post)?,
    })
}

struct Ctx {
    format: Format,
    precise: bool,
    data_dir: Option<PathBuf>,
}

impl Ctx {
    fn store(&self) -> Result<Store> {
        Ok(match &self.data_dir {
            Some(d) => Store::open(d)?,
            None => Store::bundled_only(),
        })
    }

    /// Scalar results: four significant figures unless `--precise`.
    fn number(&self, x: f64) -> String {
        if self.precise || x == 0.0 {
            return x.to_string();
        }
        let mag = x.abs();
        if (1e-4..1e6).contains(&mag) {
            let decimals = (3 - mag.log10().floor() as i32).max(0) as usize;
            let s = format!("{x:.decimals$}");
            if s.contains('.') {
                s.trim_end_matches('0').trim_end_matches('.').to_string()
            } else {
                s
            }
        } else {
            sig(x, 4)
        }
    }

    fn pct(&self, p: f64) -> String {
        if self.precise {
            percent_precise(p)
        } else {
            percent(p)
        }
    }

    /// Prints one named value in the chosen format.
    fn scalar(&self, name: &str, x: f64) -> Result<String> {
        Ok(match self.format {
            Format::Text => format!("{}\n", self.number(x)),
            Format::Csv => format!("{name}\n{x}\n"),
            Format::Doc => doc(&serde_json::json!({ name: x }))?,
        })
    }
}

fn doc<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

struct Resolved {
    doc: ModelDocument,
    model: CascadeModel,
}

fn resolve(store: &Store, args: &ModelArgs) -> Result<Resolved> {
    let (base, mut overrides) = match &args.scenario {
        Some(id) => {
            let s = store.scenario(id)?;
            (s.base_model, s.overrides)
        }
        None => (args.model.clone(), Overrides::new()),
    };
    overrides.extend(args.overrides.iter().cloned());
    let doc = store.model(&base)?;
    let model = apply_overrides(&doc.model, &overrides)?;
    Ok(Resolved { doc, model })
}

fn run(cli: Cli) -> Result<(String, u8)> {
    let ctx = Ctx {
        format: cli.format,
        precise: cli.precise,
        data_dir: cli.data_dir,
    };
    let out = match cli.command {
        Command::Evaluate(args) | Command::Export(args) => {
            let r = resolve(&ctx.store()?, &args)?;
            if ctx.format == Format::Doc {
                doc(&evaluate_cascade(&r.model)?)?
            } else {
                let report = export_report(&r.model, r.doc.annotation("joint-odds"))?;
                match ctx.format {
                    Format::Csv => report.to_csv(ctx.precise),
                    _ => report.to_text(ctx.precise),
                }
            }
        }
        Command::Grid(cmd) => grid(&ctx, cmd)?,
        Command::Hazard(cmd) => hazard(&ctx, cmd)?,
        Command::Econ(cmd) => econ(&ctx, cmd)?,
        Command::Aggregate(cmd) => aggregate(&ctx, cmd)?,
        Command::Tornado(args) => {
            let r = resolve(&ctx.store()?, &args.model)?;
            let sweeps = if args.sweeps.is_empty() {
                certainty_sweeps(&r.model)
            } else {
                args.sweeps
            };
            let entries = tornado(&r.model, &sweeps)?;
            match ctx.format {
                Format::Doc => doc(&entries)?,
                Format::Csv => tornado_csv(&entries),
                Format::Text => {
                    let w = entries
                        .iter()
                        .map(|e| e.factor_id.len())
                        .max()
                        .unwrap_or(0)
                        .max(6);
                    let mut s = format!(
                        "{:<w$}  {:>9}  {:>9}  {:>10}  {:>10}\n",
                        "factor", "low", "high", "joint low", "joint high"
                    );
                    for e in &entries {
                        let _ = writeln!(
                            s,
                            "{:<w$}  {:>9}  {:>9}  {:>10}  {:>10}",
                            e.factor_id,
                            ctx.pct(e.low_input.value()),
                            ctx.pct(e.high_input.value()),
                            ctx.pct(e.joint_low.value()),
                            ctx.pct(e.joint_high.value())
                        );
                    }
                    s
                }
            }
        }
        Command::Solve(args) => solve(&ctx, args)?,
        Command::Serve(args) => {
            serve(&ctx, args)?;
            String::new()
        }
        Command::Reproduce(args) => {
            let mut store = Store::bundled_only();
            if let Some(dir) = &args.bundle_dir {
                store = store.with_reference_dir(dir)?;
            }
            let started = Instant::now();
            let report = reproduce(&store, &args.only)?;
            let mut out = match ctx.format {
                Format::Doc => doc(&report)?,
                Format::Csv => report.to_csv(),
                Format::Text => report.to_text(),
            };
            if ctx.format == Format::Text {
                let _ = writeln!(
                    out,
                    "finished in {:.0} ms",
                    started.elapsed().as_secs_f64() * 1e3
                );
            }
            let code = if report.passed() {
                exit::OK
            } else {
                exit::VALIDATION
            };
            return Ok((out, code));
        }
    };
    Ok((out, exit::OK))
}

fn grid(ctx: &Ctx, cmd: GridCommand) -> Result<String> {
    let store = ctx.store()?;
    match cmd {
        GridCommand::Evaluate {
            model,
            grid,
            threshold,
            inclusive,
        } => {
            let d = store.model(&model)?;
            let spec = match &grid {
                Some(name) => d.grid(name),
                None => d.grids.first(),
            }
            .ok_or_else(|| {
                anyhow!(
                    "model '{model}' has no grid{}",
                    grid.map(|g| format!(" '{g}'")).unwrap_or_default()
                )
            })?;
            let axis = |name: &str| {
                d.distribution(name)
                    .ok_or_else(|| anyhow!("model '{model}' has no distribution '{name}'"))
            };
            let rule = match threshold {
                Some(t) => QualifierRule::new(t, !inclusive)?,
                None => QualifierRule {
                    strict: spec.rule.strict && !inclusive,
                    ..spec.rule
                },
            };
            let g = build_joint_grid(axis(&spec.rows)?, axis(&spec.cols)?, rule)?;
            Ok(match ctx.format {
                Format::Doc => doc(&g)?,
                Format::Csv => g.to_csv(),
                Format::Text => g.to_text(),
            })
        }
        GridCommand::AtLeast {
            model,
            distribution,
            index,
        } => {
            let d = store.model(&model)?;
            let dist = d
                .distribution(&distribution)
                .ok_or_else(|| anyhow!("model '{model}' has no distribution '{distribution}'"))?;
            ctx.scalar("mass", at_least_mass(dist, index)?.value())
        }
        GridCommand::Expectation {
            model,
            achievement,
            linked,
        } => {
            let d = store.model(&model)?;
            let find = |name: &str| {
                d.achievement(name)
                    .ok_or_else(|| anyhow!("model '{model}' has no achievement '{name}'"))
            };
            let a = find(&achievement)?;
            let needs = d.distribution(&a.distribution).ok_or_else(|| {
                anyhow!("model '{model}' has no distribution '{}'", a.distribution)
            })?;
            let p = match linked {
                Some(b) => linked_joint_expectation(needs, &a.values, &find(&b)?.values)?,
                None => scenario_expectation(needs, &a.values)?,
            };
            ctx.scalar("expectation", p.value())
        }
    }
}

fn hazard(ctx: &Ctx, cmd: HazardCommand) -> Result<String> {
    let p = match cmd {
        HazardCommand::Rescale { p, from, to } => {
            rescale(HorizonRisk::new(p, from)?, to)?.probability
        }
        HazardCommand::Cumulative { annual, years } => cumulative_from_annual(annual, years)?,
        HazardCommand::Annual { cumulative, years } => annual_from_cumulative(cumulative, years)?,
        HazardCommand::AnyOf { risks } => any_of(&risks),
        HazardCommand::Derail { event, delay } => derail_probability(&DerailmentEvent {
            name: String::new(),
            event_risk: HorizonRisk::new(event, 1.0)?,
            delay_given_event: delay,
        }),
        HazardCommand::Survival { model, events } => {
            let d = ctx.store()?.model(&model)?;
            let chosen: Vec<DerailmentEvent> = if events.is_empty() {
                d.derailments.clone()
            } else {
                events
                    .iter()
                    .map(|n| {
                        d.derailment(n)
                            .cloned()
                            .ok_or_else(|| anyhow!("model '{model}' has no derailment '{n}'"))
                    })
                    .collect::<Result<_>>()?
            };
            combined_survival(&chosen)
        }
    };
    ctx.scalar("probability", p.value())
}

fn econ(ctx: &Ctx, cmd: EconCommand) -> Result<String> {
    let (name, x) = match cmd {
        EconCommand::FlopsPerDollarHour { flops, price } => (
            "flops_per_dollar_hour",
            flops_per_dollar_hour(flops, price)?,
        ),
        EconCommand::OpsPerDollar { flops, price } => {
            ("ops_per_dollar", ops_per_dollar(flops, price)?)
        }
        EconCommand::InferenceCost { flops, efficiency } => (
            "dollars_per_hour",
            inference_cost_per_hour(flops, efficiency)?,
        ),
        EconCommand::TrainingCost {
            ops,
            ops_per_dollar,
        } => ("dollars", training_cost(ops, ops_per_dollar)?),
        EconCommand::Devices {
            labor_hours,
            utilization,
        } => ("devices", concurrent_devices(labor_hours, utilization)?),
        EconCommand::TrainingDevices { ops, flops, years } => {
            ("devices", devices_for_training(ops, flops, years)?)
        }
        EconCommand::Cagr {
            target,
            base,
            years,
        } => ("rate", implied_cagr(target, base, years)?),
        EconCommand::Growth { base, rate, years } => ("value", project_growth(base, rate, years)?),
        EconCommand::Euv {
            wafers_per_hour,
            steps,
            uptime,
            hours,
        } => (
            "wafers_per_year",
            euv_wafer_throughput(wafers_per_hour, steps, uptime, hours)?,
        ),
        EconCommand::RobotCost {
            price,
            lifetime_hours,
        } => (
            "dollars_per_hour",
            robot_amortized_cost(price, lifetime_hours)?,
        ),
        EconCommand::RobotsPerYear {
            labor_hours,
            lifetime_hours,
        } => (
            "robots_per_year",
            robots_per_year(labor_hours, lifetime_hours)?,
        ),
        EconCommand::Bill { model, workload } => {
            let d = ctx.store()?.model(&model)?;
            let w = d
                .workload(&workload)
                .ok_or_else(|| anyhow!("model '{model}' has no workload '{workload}'"))?;
            let columns = vec![
                BillColumn {
                    label: format!("{workload} training"),
                    flops_needed: w.training_flops()?,
                },
                BillColumn {
                    label: format!("{workload} inference"),
                    flops_needed: w.inference_flops()?,
                },
            ];
            let table = bill_table(columns, &d.device_specs)?;
            return Ok(match ctx.format {
                Format::Doc => doc(&table)?,
                Format::Csv => table.to_csv(!ctx.precise),
                Format::Text => table.to_text(),
            });
        }
    };
    ctx.scalar(name, x)
}

fn aggregate(ctx: &Ctx, cmd: AggregateCommand) -> Result<String> {
    let (name, x) = match cmd {
        AggregateCommand::Extremize { p, exponent } => {
            ("probability", extremize(p, exponent)?.value())
        }
        AggregateCommand::Exponent { from, to } => {
            let a = solve_extremizing_exponent(from, to)?;
            // the solver's answer must map `from` back onto `to`
            let forward = extremize(from, a)?;
            if (forward.value() - to.value()).abs() > 1e-9 {
                bail!(
                    "exponent {a} maps {} to {}, not {}",
                    from.value(),
                    forward.value(),
                    to.value()
                );
            }
            ("exponent", a)
        }
        AggregateCommand::Pool {
            forecasts,
            method,
            weights,
        } => {
            let set = ForecastSet::new(forecasts, weights)?;
            let method = match method {
                Method::Mean => PoolMethod::Mean,
                Method::OddsGeometricMean => PoolMethod::OddsGeometricMean,
            };
            ("probability", pool(&set, method)?.value())
        }
        AggregateCommand::Martingale { prior, outcomes } => (
            "residual",
            martingale_check(prior, &EvidencePartition::new(outcomes)?),
        ),
        AggregateCommand::Prior { favorable, total } => {
            ("probability", partition_prior(favorable, total)?.value())
        }
    };
    ctx.scalar(name, x)
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    multiplier: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    factor_id: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    required: Option<f64>,
    factors: Vec<(&'a str, FactorValue)>,
    achieved: f64,
}

fn solve(ctx: &Ctx, args: SolveArgs) -> Result<String> {
    let r = resolve(&ctx.store()?, &args.model)?;
    let (multiplier, required, model) = match &args.factor {
        Some(id) => {
            let v = required_value(&r.model, id, args.target)?;
            let mut o = Overrides::new();
            o.insert(id.clone(), FactorValue::Known(v));
            (None, Some(v.value()), apply_overrides(&r.model, &o)?)
        }
        None => {
            let subset = r.doc.resolve_subset(&args.subset).map_err(|e| anyhow!(e))?;
            let sol = solve_uniform_multiplier(&r.model, args.target, &subset)?;
            (Some(sol.multiplier), None, sol.model)
        }
    };
    let achieved = evaluate_cascade(&model)?.joint_odds.value();
    let out = SolveOutput {
        multiplier,
        factor_id: args.factor.as_deref(),
        required,
        factors: model
            .factors
            .iter()
            .map(|f| (f.id.as_str(), f.probability))
            .collect(),
        achieved,
    };
    Ok(match ctx.format {
        Format::Doc => doc(&out)?,
        Format::Csv => {
            let mut s = String::from("factor,probability\n");
            for (id, v) in &out.factors {
                let _ = writeln!(s, "{id},{v}");
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            if let Some(m) = multiplier {
                let _ = writeln!(s, "Multiplier  {}", ctx.number(m));
            }
            if let (Some(id), Some(v)) = (&args.factor, required) {
                let _ = writeln!(s, "Required {id}  {}", ctx.pct(v));
            }
            let w = out
                .factors
                .iter()
                .map(|(id, _)| id.len())
                .max()
                .unwrap_or(0);
            for (id, v) in &out.factors {
                let shown = match v {
                    FactorValue::Known(p) => ctx.pct(p.value()),
                    FactorValue::NotApplicable => FactorValue::NA_TOKEN.to_string(),
                };
                let _ = writeln!(s, "  {id:<w$}  {shown:>8}");
            }
            let _ = writeln!(s, "Joint odds  {}", ctx.pct(achieved));
            s
        }
    })
}

fn serve(ctx: &Ctx, args: ServeArgs) -> Result<()> {
    let store = ctx.store()?;
    let runtime = tokio::runtime::Runtime::new().context("starting the async runtime")?;
    runtime.block_on(async move {
        let addr = SocketAddr::new(args.host, args.port);
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        match store.data_dir() {
            Some(d) => eprintln!("data directory {}", d.display()),
            None => eprintln!("no data directory; scenario saves are disabled"),
        }
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        cascade_server::serve(listener, store, shutdown).await?;
        Ok(())
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::VALIDATION
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((out, code)) => {
            let mut stdout = io::stdout().lock();
            if stdout
                .write_all(out.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(exit::STORAGE);
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::status_for(&e))
        }
    }
}
