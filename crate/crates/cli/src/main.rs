//! `hconvex`: batch front end for the horizontal convexity verifiers, the
//! cyclic monotonicity and potential tools, and the discrete transport
//! solver.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use hconvex_core::cost::{fenchel_identity_check, in_c_h_subdifferential, subdiff_singleton};
use hconvex_core::hconvex::check_all_characterizations;
use hconvex_core::io::{format_instance, parse_instance, parse_pairs, parse_point};
use hconvex_core::monotone::{check_c_h_cyclic_monotone, rockafellar_potential};
use hconvex_core::transport::{
    brute_force_oracle, certify_plan, extract_potential_and_map, generate_instance, solve_kantorovich,
    support_monotonicity_check, InstanceMode, ORACLE_MAX_ATOMS,
};
use hconvex_core::{
    BuiltinCost, BuiltinField, CostFunction, CycleWitness, Error, GroupModel, HGraph, HorizontalVector,
    MonotonePairSet, Region, Result, Sampling, ScalarField, SquareGrid, TransportInstance, Verdict,
};
use report::{num, point, vector, Format, Report};
use serde_json::{json, Value};

/// Largest oracle size used by `transport`.
const CLI_ORACLE_ATOMS: usize = 7;
const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "hconvex",
    version,
    about = "Horizontal convexity on Carnot groups: verifiers, potentials and transport"
)]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Options {
    /// heisenberg or engel.
    #[arg(long, global = true, default_value = "heisenberg")]
    group: GroupModel,
    /// linear or neg_quadratic.
    #[arg(long, global = true, default_value = "linear")]
    cost: BuiltinCost,
    /// Explicit cost vector "a b" to test in `subdiff` instead of the
    /// analytic candidate.
    #[arg(long, global = true, allow_hyphen_values = true)]
    cost_v: Option<String>,
    /// Field spec, e.g. sq_v1, sq_v1:-0.5, linear:1,2, coord:t, poly:x^2+y^2.
    #[arg(long, global = true)]
    field: Option<String>,
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Horizontality tolerance for pair sets and transport cells.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol_h: f64,
    /// Finite-difference step (default 1e-4 max(1, |g|)).
    #[arg(long, global = true)]
    fd_step: Option<f64>,
    #[arg(long, global = true, default_value_t = 2000)]
    samples: usize,
    /// Points per axis of the plane grid (odd).
    #[arg(long, global = true, default_value_t = 21)]
    plane_grid: usize,
    #[arg(long, global = true, default_value_t = 2.0)]
    plane_radius: f64,
    /// Points per axis of the cost-vector grid (odd).
    #[arg(long, global = true, default_value_t = 33)]
    v_grid: usize,
    #[arg(long, global = true, default_value_t = 8.0)]
    v_radius: f64,
    #[arg(long, global = true, default_value_t = 5)]
    max_cycle_len: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value = "tsv")]
    output: Format,
    /// Center of the gauge ball region (identity by default).
    #[arg(long, global = true, allow_hyphen_values = true)]
    center: Option<String>,
    /// Radius of the gauge ball region; the whole group when absent.
    #[arg(long, global = true)]
    radius: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Runs the segment, first-order, gradient-monotonicity and Hessian tests.
    CheckHconvex,
    /// Analytic c H-subgradient at a point, membership and Fenchel gap.
    Subdiff {
        /// Coordinates "x y t" (or comma separated).
        #[arg(allow_hyphen_values = true)]
        point: String,
    },
    /// c H-cyclic monotonicity of a pair file (`x y t | p1 p2` per line).
    MonotoneCheck { pairs: PathBuf },
    /// Rockafellar potential of a pair file from a base point.
    Potential {
        pairs: PathBuf,
        /// Base point; the first record when absent.
        #[arg(allow_hyphen_values = true)]
        base: Option<String>,
    },
    /// Solves a discrete Kantorovich problem on the Heisenberg group.
    Transport { instance: PathBuf },
    /// Writes a random instance file to stdout.
    GenerateInstance {
        /// pushforward, random-horizontal or adversarial.
        #[arg(long, default_value = "pushforward")]
        mode: InstanceMode,
        #[arg(long, default_value_t = 5)]
        atoms: usize,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckHconvex => "check-hconvex",
            Command::Subdiff { .. } => "subdiff",
            Command::MonotoneCheck { .. } => "monotone-check",
            Command::Potential { .. } => "potential",
            Command::Transport { .. } => "transport",
            Command::GenerateInstance { .. } => "generate-instance",
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

impl Options {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("--tol", self.tol),
            ("--tol-h", self.tol_h),
            ("--plane-radius", self.plane_radius),
            ("--v-radius", self.v_radius),
            ("--fd-step", self.fd_step.unwrap_or(1.0)),
            ("--radius", self.radius.unwrap_or(1.0)),
        ];
        for (flag, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(usage(format!("{flag} must be positive, got {v}")));
            }
        }
        if self.samples == 0 {
            return Err(usage("--samples must be at least 1"));
        }
        if self.max_cycle_len == 0 {
            return Err(usage("--max-cycle-len must be at least 1"));
        }
        self.plane_grid()?;
        self.v_grid()?;
        Ok(())
    }

    fn echo(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "-".into());
        vec![
            ("group", self.group.to_string()),
            ("cost", self.cost.to_string()),
            ("cost-v", opt(self.cost_v.clone())),
            ("field", opt(self.field.clone())),
            ("tol", format!("{:e}", self.tol)),
            ("tol-h", format!("{:e}", self.tol_h)),
            ("fd-step", opt(self.fd_step.map(|h| format!("{h:e}")))),
            ("samples", self.samples.to_string()),
            ("plane-grid", self.plane_grid.to_string()),
            ("plane-radius", self.plane_radius.to_string()),
            ("v-grid", self.v_grid.to_string()),
            ("v-radius", self.v_radius.to_string()),
            ("max-cycle-len", self.max_cycle_len.to_string()),
            ("seed", self.seed.to_string()),
            ("center", opt(self.center.clone())),
            ("radius", opt(self.radius.map(|r| r.to_string()))),
        ]
    }

    fn sampling(&self) -> Sampling {
        Sampling::new(self.samples, self.seed).with_plane_radius(self.plane_radius)
    }

    fn plane_grid(&self) -> Result<SquareGrid> {
        SquareGrid::new(self.plane_radius, self.plane_grid)
    }

    fn v_grid(&self) -> Result<SquareGrid> {
        SquareGrid::new(self.v_radius, self.v_grid)
    }

    fn region(&self) -> Result<Region> {
        let center = match &self.center {
            Some(text) => parse_point(text, self.group)?,
            None => self.group.identity(),
        };
        match self.radius {
            Some(r) => Region::ball(center, r),
            None if self.center.is_some() => Err(usage("--center needs --radius")),
            None => Ok(Region::whole(self.group)),
        }
    }

    fn field(&self) -> Result<BuiltinField> {
        let spec = self.field.as_deref().ok_or_else(|| usage("--field is required"))?;
        BuiltinField::parse(spec, self.group)
    }

    fn cost_v(&self) -> Result<Option<HorizontalVector>> {
        let Some(text) = &self.cost_v else { return Ok(None) };
        let parts: Vec<f64> = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| usage(format!("invalid --cost-v component '{s}'")))
            })
            .collect::<Result<_>>()?;
        match parts[..] {
            [a, b] if a.is_finite() && b.is_finite() => Ok(Some(HorizontalVector::new(a, b))),
            _ => Err(usage(format!("--cost-v needs two finite components, got '{text}'"))),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn verdict_row(name: &str, v: &Verdict) -> Vec<Value> {
    vec![
        json!(name),
        json!(v.passed),
        num(v.violation),
        json!(v.evaluated),
        json!(v.skipped),
    ]
}

fn check_hconvex(opts: &Options, report: &mut Report) -> Result<bool> {
    let u = opts.field()?;
    let region = opts.region()?;
    let r = check_all_characterizations(&u, &region, &opts.sampling(), opts.tol, opts.fd_step)?;
    let seg = &r.segmentwise;
    let rows = vec![
        vec![
            json!("segmentwise"),
            json!(seg.is_h_convex),
            num(seg.violation),
            json!(seg.samples),
            Value::Null,
        ],
        verdict_row("first_order", &r.first_order),
        verdict_row("gradient_monotone", &r.gradient_monotone),
        verdict_row("hessian_psd", &r.hessian_psd),
    ];
    report.table(
        "characterizations",
        &["test", "passed", "violation", "evaluated", "skipped"],
        &rows,
    );
    report.summary(&[("agree", json!(r.agree())), ("estimated_ell", num(seg.estimated_ell))]);
    if let Some(w) = seg.witness.as_ref().filter(|_| !seg.is_h_convex) {
        let sigma = w.g.horizontal_segment(&w.g_prime, w.lambda);
        let (ug, ug2, us) = (u.eval(&w.g), u.eval(&w.g_prime), u.eval(&sigma));
        report.witness(json!({
            "test": "segmentwise",
            "field": u.to_string(),
            "group": opts.group.to_string(),
            "g": point(&w.g),
            "g_prime": point(&w.g_prime),
            "lambda": num(w.lambda),
            "sigma": point(&sigma),
            "u_sigma": num(us),
            "chord": num((1.0 - w.lambda) * ug + w.lambda * ug2),
            "excess": num(seg.violation),
        }));
    }
    for (name, v) in [
        ("first_order", &r.first_order),
        ("gradient_monotone", &r.gradient_monotone),
        ("hessian_psd", &r.hessian_psd),
    ] {
        if !v.passed {
            report.witness(json!({
                "test": name,
                "field": u.to_string(),
                "group": opts.group.to_string(),
                "g": v.witness_g.as_ref().map(point),
                "g_prime": v.witness_g_prime.as_ref().map(point),
                "violation": num(v.violation),
            }));
        }
    }
    Ok(r.agree() && r.all_pass())
}

fn subdiff(opts: &Options, text: &str, report: &mut Report) -> Result<bool> {
    let u = opts.field()?;
    let c = opts.cost;
    let g = parse_point(text, opts.group)?;
    let region = opts.region()?;
    let sampling = opts.sampling();
    let (source, candidates) = match opts.cost_v()? {
        Some(p) => ("explicit", vec![p]),
        None => match subdiff_singleton(&u, &c, &g, opts.fd_step) {
            Ok(p) => ("analytic", vec![p]),
            Err(Error::NotDifferentiable(_)) => ("grid", opts.v_grid()?.nodes()),
            Err(e) => return Err(e),
        },
    };
    let mut best: Option<(HorizontalVector, Verdict)> = None;
    let mut members = 0usize;
    for p in &candidates {
        let v = in_c_h_subdifferential(&u, &c, &g, *p, &region, &sampling, opts.tol)?;
        members += v.passed as usize;
        if best.as_ref().is_none_or(|(_, b)| v.violation < b.violation) {
            best = Some((*p, v));
        }
    }
    let (p, verdict) = best.expect("at least one candidate");
    report.summary(&[
        ("point", point(&g)),
        ("candidate_source", json!(source)),
        ("candidates", json!(candidates.len())),
        ("candidate", vector(&p)),
        ("member", json!(verdict.passed)),
        ("members", json!(members)),
        ("violation", num(verdict.violation)),
    ]);
    if u.eval(&g).is_finite() {
        let f = fenchel_identity_check(&u, &c, &g, p, &region, &opts.plane_grid()?, opts.tol)?;
        report.summary(&[
            ("fenchel", num(f.fenchel)),
            ("fenchel_gap", num(f.residual)),
            ("grid_gap_bound", num(f.grid_gap_bound)),
        ]);
    }
    if !verdict.passed {
        if let Some(g2) = verdict.witness_g_prime {
            report.witness(json!({
                "test": "c_subdifferential",
                "field": u.to_string(),
                "cost": c.to_string(),
                "g": point(&g),
                "g_prime": point(&g2),
                "p": vector(&p),
                "u_g": num(u.eval(&g)),
                "u_g_prime": num(u.eval(&g2)),
                "c_increment": num(c.increment(&g, &g2, p)),
                "violation": num(verdict.violation),
            }));
        }
    }
    Ok(verdict.passed)
}

fn cycle_block(w: &CycleWitness, c: &BuiltinCost) -> Value {
    json!({
        "test": "cyclic_monotonicity",
        "cost": c.to_string(),
        "indices": w.indices,
        "points": w.points.iter().map(point).collect::<Vec<_>>(),
        "vectors": w.vectors.iter().map(vector).collect::<Vec<_>>(),
        "weight": num(w.weight),
    })
}

fn load_pairs(opts: &Options, path: &Path) -> Result<MonotonePairSet> {
    let pairs = parse_pairs(&read(path)?, opts.group)?;
    if pairs.is_empty() {
        return Err(usage(format!("{} contains no pairs", path.display())));
    }
    MonotonePairSet::new(pairs, opts.tol_h)
}

fn monotone_check(opts: &Options, path: &Path, report: &mut Report) -> Result<bool> {
    let set = load_pairs(opts, path)?;
    let r = check_c_h_cyclic_monotone(&set, &opts.cost, opts.max_cycle_len, opts.tol)?;
    report.summary(&[
        ("pairs", json!(set.len())),
        ("cycles_enumerated", json!(r.cycles_enumerated)),
        ("enumeration_truncated", json!(r.enumeration_truncated)),
        ("max_cycle_weight", num(r.max_cycle_weight)),
        ("positive_cycle_detected", json!(r.positive_cycle_detected)),
    ]);
    if let Some(w) = &r.witness {
        report.witness(cycle_block(w, &opts.cost));
    }
    Ok(r.passed)
}

fn potential(opts: &Options, path: &Path, base: Option<&str>, report: &mut Report) -> Result<bool> {
    let set = load_pairs(opts, path)?;
    let g0 = match base {
        Some(text) => parse_point(text, opts.group)?,
        None => set.pairs()[0].0,
    };
    match rockafellar_potential(&set, &opts.cost, &g0) {
        Ok(t) => {
            let rows: Vec<Vec<Value>> = t
                .nodes
                .iter()
                .zip(&t.values)
                .zip(&t.certified)
                .map(|((g, f), ok)| vec![point(g), num(*f), json!(ok)])
                .collect();
            report.table("potential", &["point", "f", "certified"], &rows);
            report.summary(&[
                ("base", point(&g0)),
                ("certification_violation", num(t.certification_violation)),
            ]);
            Ok(t.fully_certified())
        }
        Err(Error::Unbounded { cycle, weight }) => {
            let graph = HGraph::build(&set, &opts.cost);
            report.summary(&[("base", point(&g0)), ("unbounded", json!(true))]);
            report.witness(json!({
                "test": "bounded_potential",
                "cost": opts.cost.to_string(),
                "indices": cycle,
                "points": cycle.iter().map(|&i| point(&graph.nodes[i])).collect::<Vec<_>>(),
                "weight": num(weight),
            }));
            Ok(false)
        }
        Err(e) => Err(e),
    }
}

fn transport(opts: &Options, path: &Path, report: &mut Report) -> Result<bool> {
    if opts.group != GroupModel::Heisenberg {
        return Err(usage("transport instances live on the heisenberg group"));
    }
    let (mu, nu) = parse_instance(&read(path)?)?;
    let cost: Arc<dyn CostFunction> = Arc::new(opts.cost);
    let mut inst = TransportInstance::new(mu, nu, cost)?;
    inst.tol_h = opts.tol_h;
    let plan = solve_kantorovich(&inst)?;
    let rows: Vec<Vec<Value>> = plan
        .support()
        .into_iter()
        .map(|(i, j, m)| vec![json!(i), json!(j), num(m)])
        .collect();
    report.table("plan", &["i", "j", "mass"], &rows);
    let cert = certify_plan(&plan, &inst);
    report.summary(&[
        ("value", num(plan.value)),
        ("method", json!(format!("{:?}", plan.method))),
        ("marginal_error", num(cert.marginal_error)),
        ("dual_violation", num(cert.dual_violation)),
        ("duality_gap", num(cert.duality_gap)),
        ("certified", json!(cert.optimal)),
    ]);
    let mut passed = cert.optimal;
    if inst.is_uniform_square() && inst.mu.len() <= CLI_ORACLE_ATOMS.min(ORACLE_MAX_ATOMS) {
        let oracle = brute_force_oracle(&inst)?;
        let agrees = (oracle.value - plan.value).abs() <= ORACLE_TOL;
        passed &= agrees;
        report.summary(&[("oracle_value", num(oracle.value)), ("oracle_agrees", json!(agrees))]);
    }
    let mono = support_monotonicity_check(&plan, &inst, opts.max_cycle_len, opts.tol)?;
    report.summary(&[("support_monotone", json!(mono.passed))]);
    passed &= mono.passed;
    if let Some(w) = &mono.witness {
        report.witness(cycle_block(w, &opts.cost));
    }
    match extract_potential_and_map(&plan, &inst) {
        Ok(map) => {
            let rows: Vec<Vec<Value>> = map
                .entries
                .iter()
                .map(|e| {
                    let target = e.nu_index.map_or_else(|| "?".to_string(), |j| j.to_string());
                    vec![
                        json!(format!("{} -> {target}", e.mu_index)),
                        vector(&e.displacement),
                        json!(e.certified_candidates),
                        json!(e.singleton),
                    ]
                })
                .collect();
            report.table(
                "map",
                &["map", "displacement", "certified_candidates", "singleton"],
                &rows,
            );
        }
        Err(e) => report.summary(&[("map", json!(format!("unavailable: {e}")))]),
    }
    Ok(passed)
}

fn generate(opts: &Options, mode: InstanceMode, atoms: usize) -> Result<String> {
    let g = generate_instance(atoms, opts.seed, mode, Arc::new(opts.cost))?;
    let mut out = format!("# mode {mode:?}, seed {}, cost {}\n", opts.seed, opts.cost);
    if let Some(map) = &g.generator_map {
        let pairs: Vec<String> = map.iter().enumerate().map(|(i, j)| format!("{i}->{j}")).collect();
        out.push_str(&format!("# optimal map {}\n", pairs.join(" ")));
    }
    out.push_str(&format_instance(&g.instance.mu, &g.instance.nu));
    Ok(out)
}

fn run(cli: &Cli) -> Result<bool> {
    let opts = &cli.opts;
    opts.validate()?;
    if let Command::GenerateInstance { mode, atoms } = &cli.command {
        print!("{}", generate(opts, *mode, *atoms)?);
        return Ok(true);
    }
    let mut report = Report::new(opts.output, cli.command.name(), &opts.echo());
    let passed = match &cli.command {
        Command::CheckHconvex => check_hconvex(opts, &mut report)?,
        Command::Subdiff { point } => subdiff(opts, point, &mut report)?,
        Command::MonotoneCheck { pairs } => monotone_check(opts, pairs, &mut report)?,
        Command::Potential { pairs, base } => potential(opts, pairs, base.as_deref(), &mut report)?,
        Command::Transport { instance } => transport(opts, instance, &mut report)?,
        Command::GenerateInstance { .. } => unreachable!("handled above"),
    };
    report.verdict(passed);
    report.flush().map_err(|e| usage(format!("cannot write report: {e}")))?;
    Ok(passed)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Infeasible { .. } => 3,
        Error::Unbounded { .. } | Error::Inconsistent(_) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
