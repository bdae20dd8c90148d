//! Experiment runner behind the `hkrenorm` binary.
//!
//! A run is fully described by a [`RunConfig`]: defaults, then an optional
//! `key = value` file, then command-line flags, later sources winning. Every
//! report is a CSV table framed by `#` lines: a versioned header, the resolved
//! configuration (one `# config key=value` line per key, fixed order), and a
//! trailing summary with a PASS/FAIL status. Floats are printed with 12
//! significant digits so identical configurations give identical bytes.

use crate::cover::{self, default_schedule};
use crate::error::{Error, Result};
use crate::expansion::{self, Truncation};
use crate::graphs::{self, EnumerationBounds, StableGraph};
use crate::heatkernel::Geometry;
use crate::quad::{adaptive_ext, Tolerance};
use crate::renorm::{self, TimeRule};
use crate::scalar::{ratio_to_f64, Q};
use crate::weights::{self, field::Field, LocalFunctionalSpec};
use crate::wick::{self, Endpoint};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Graphs,
    Wick,
    Cover,
    Weight,
    Counterterm,
    Expand,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Graphs => "graphs",
            Command::Wick => "wick",
            Command::Cover => "cover",
            Command::Weight => "weight",
            Command::Counterterm => "counterterm",
            Command::Expand => "expand",
        }
    }
}

/// Resolved settings of one run. Keys and defaults are listed in [`RunConfig::KEYS`].
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub geometry: Geometry,
    pub n: usize,
    pub r: f64,
    /// Exponent schedule `s_0, s_1, …`; empty means the default `1, 1, 2, 4, …`.
    pub schedule: Vec<f64>,
    pub graph: String,
    pub coupling: f64,
    /// Vertex types `genus:valence` of the random interactions in `expand`.
    pub interaction: Vec<(u32, u32)>,
    pub field: String,
    /// Taylor order of the truncated weight; `None` picks the minimal order.
    pub n_prime: Option<usize>,
    pub times: Vec<f64>,
    pub genus: u32,
    pub tails: u32,
    pub edges: u32,
    pub m: u32,
    pub alpha: Q,
    pub beta: Q,
    pub a: Endpoint,
    pub b: Endpoint,
    pub k: usize,
    pub samples: usize,
    pub d: usize,
    pub order: i32,
    pub degree: u32,
    pub euler: u32,
    pub instances: usize,
    pub j_min: u32,
    pub j_max: u32,
    pub panel: f64,
    pub nodes: usize,
    pub tol: f64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::InvalidParameter(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect()
}

fn parse_q(key: &str, v: &str) -> Result<Q> {
    let v = v.trim();
    if let Ok(q) = Q::from_str(v) {
        return Ok(q);
    }
    let x: f64 = parse(key, v)?;
    Q::from_float(x).ok_or_else(|| Error::InvalidParameter(format!("{key}: {v} is not finite")))
}

fn parse_endpoint(key: &str, v: &str) -> Result<Endpoint> {
    match v.trim() {
        "-inf" => Ok(Endpoint::NegInf),
        "inf" | "+inf" => Ok(Endpoint::PosInf),
        s => Ok(Endpoint::Finite(parse(key, s)?)),
    }
}

fn show_endpoint(e: Endpoint) -> String {
    match e {
        Endpoint::NegInf => "-inf".into(),
        Endpoint::PosInf => "inf".into(),
        Endpoint::Finite(x) => x.to_string(),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Every key in report order.
    pub const KEYS: [&'static str; 33] = [
        "command", "geometry", "n", "r", "schedule", "graph", "coupling", "interaction", "field", "n_prime", "times",
        "genus", "tails", "edges", "m", "alpha", "beta", "a", "b", "k", "samples", "d", "order", "degree", "euler",
        "instances", "j_min", "j_max", "panel", "nodes", "tol", "seed", "output",
    ];

    pub fn defaults(command: Command) -> Self {
        RunConfig {
            command,
            geometry: Geometry::Plane,
            n: 1,
            r: 4.0,
            schedule: Vec::new(),
            graph: "bubble".into(),
            coupling: 1.0,
            interaction: vec![(0, 3), (0, 4), (1, 1), (1, 2), (2, 0)],
            field: "gauss".into(),
            n_prime: None,
            times: vec![0.05, 0.1],
            genus: 2,
            tails: 0,
            edges: 6,
            m: 8,
            alpha: Q::from_integer(1.into()),
            beta: Q::from_integer(0.into()),
            a: Endpoint::NegInf,
            b: Endpoint::PosInf,
            k: 3,
            samples: 100_000,
            d: 1,
            order: 3,
            degree: 8,
            euler: 6,
            instances: 20,
            j_min: 3,
            j_max: 14,
            panel: 1.0,
            nodes: 8,
            tol: 1e-9,
            seed: 1,
            output: None,
        }
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let k = key.as_str();
        match k {
            "command" => {
                if v.trim() != self.command.name() {
                    return Err(Error::InvalidParameter(format!(
                        "config is for command {:?} but {} was invoked",
                        v.trim(),
                        self.command.name()
                    )));
                }
            }
            "geometry" => self.geometry = v.trim().parse()?,
            "n" => self.n = parse(k, v)?,
            "r" => self.r = parse(k, v)?,
            "schedule" => {
                self.schedule = if v.trim() == "default" { Vec::new() } else { parse_list(k, v)? };
            }
            "graph" => self.graph = v.trim().to_string(),
            "coupling" => self.coupling = parse(k, v)?,
            "interaction" => {
                self.interaction = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        let (g, val) = s
                            .split_once(':')
                            .ok_or_else(|| Error::InvalidParameter(format!("interaction: expected genus:valence, got {s:?}")))?;
                        Ok((parse(k, g)?, parse(k, val)?))
                    })
                    .collect::<Result<_>>()?;
            }
            "field" => self.field = v.trim().to_string(),
            "n_prime" => self.n_prime = if v.trim() == "auto" { None } else { Some(parse(k, v)?) },
            "times" => self.times = parse_list(k, v)?,
            "genus" => self.genus = parse(k, v)?,
            "tails" => self.tails = parse(k, v)?,
            "edges" => self.edges = parse(k, v)?,
            "m" => self.m = parse(k, v)?,
            "alpha" => self.alpha = parse_q(k, v)?,
            "beta" => self.beta = parse_q(k, v)?,
            "a" => self.a = parse_endpoint(k, v)?,
            "b" => self.b = parse_endpoint(k, v)?,
            "k" => self.k = parse(k, v)?,
            "samples" => self.samples = parse(k, v)?,
            "d" => self.d = parse(k, v)?,
            "order" => self.order = parse(k, v)?,
            "degree" => self.degree = parse(k, v)?,
            "euler" => self.euler = parse(k, v)?,
            "instances" => self.instances = parse(k, v)?,
            "j_min" => self.j_min = parse(k, v)?,
            "j_max" => self.j_max = parse(k, v)?,
            "panel" => self.panel = parse(k, v)?,
            "nodes" => self.nodes = parse(k, v)?,
            "tol" => self.tol = parse(k, v)?,
            "seed" => self.seed = parse(k, v)?,
            "output" => self.output = if v.trim() == "-" { None } else { Some(PathBuf::from(v.trim())) },
            _ => return Err(Error::InvalidParameter(format!("unknown config key {k:?}; known keys: {}", Self::KEYS.join(", ")))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> String {
        match key {
            "command" => self.command.name().into(),
            "geometry" => self.geometry.to_string(),
            "n" => self.n.to_string(),
            "r" => self.r.to_string(),
            "schedule" => {
                if self.schedule.is_empty() {
                    "default".into()
                } else {
                    join(&self.schedule)
                }
            }
            "graph" => self.graph.clone(),
            "coupling" => self.coupling.to_string(),
            "interaction" => self.interaction.iter().map(|(g, k)| format!("{g}:{k}")).collect::<Vec<_>>().join(","),
            "field" => self.field.clone(),
            "n_prime" => self.n_prime.map_or("auto".into(), |v| v.to_string()),
            "times" => join(&self.times),
            "genus" => self.genus.to_string(),
            "tails" => self.tails.to_string(),
            "edges" => self.edges.to_string(),
            "m" => self.m.to_string(),
            "alpha" => self.alpha.to_string(),
            "beta" => self.beta.to_string(),
            "a" => show_endpoint(self.a),
            "b" => show_endpoint(self.b),
            "k" => self.k.to_string(),
            "samples" => self.samples.to_string(),
            "d" => self.d.to_string(),
            "order" => self.order.to_string(),
            "degree" => self.degree.to_string(),
            "euler" => self.euler.to_string(),
            "instances" => self.instances.to_string(),
            "j_min" => self.j_min.to_string(),
            "j_max" => self.j_max.to_string(),
            "panel" => self.panel.to_string(),
            "nodes" => self.nodes.to_string(),
            "tol" => self.tol.to_string(),
            "seed" => self.seed.to_string(),
            "output" => self.output.as_ref().map_or("-".into(), |p| p.display().to_string()),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Applies a `key = value` document; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse { line: i + 1, msg: "expected key = value".into() })?;
            self.set(k, v).map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
        }
        Ok(())
    }

    /// The resolved configuration in the same `key = value` syntax it is read from.
    pub fn to_text(&self) -> String {
        Self::KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self.command {
            Command::Counterterm | Command::Cover if self.r <= 2.0 => return bad(format!("r must exceed 2, got {}", self.r)),
            _ => {}
        }
        if self.n == 0 || self.n > 3 {
            return bad(format!("n must be 1, 2 or 3, got {}", self.n));
        }
        if self.d == 0 || self.d > 3 {
            return bad(format!("d must be 1, 2 or 3, got {}", self.d));
        }
        if self.j_min == 0 || self.j_max <= self.j_min {
            return bad(format!("need 0 < j_min < j_max, got {}..{}", self.j_min, self.j_max));
        }
        if self.k == 0 || self.k > 6 {
            return bad(format!("k must lie in 1..=6, got {}", self.k));
        }
        if self.nodes == 0 || !(self.panel > 0.0) {
            return bad("nodes must be positive and panel > 0".into());
        }
        if self.edges > graphs::MAX_ENUMERATION_EDGES {
            return bad(format!("edges capped at {}", graphs::MAX_ENUMERATION_EDGES));
        }
        if !self.schedule.is_empty() && self.schedule.len() < self.k + 1 {
            return bad(format!("schedule needs at least k + 1 = {} entries", self.k + 1));
        }
        if self.times.iter().any(|&t| !(t > 0.0)) {
            return bad("times must be positive".into());
        }
        Ok(())
    }
}

/// A finished report.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub config: RunConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(String, String)>,
    pub passed: bool,
}

impl Report {
    fn new(config: &RunConfig, columns: &[&str]) -> Self {
        Report {
            config: config.clone(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            passed: true,
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    fn note(&mut self, key: &str, v: impl ToString) {
        self.summary.push((key.into(), v.to_string()));
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }

    pub fn render(&self) -> String {
        let mut s = format!("# hkrenorm-report v{REPORT_VERSION} command={}\n", self.config.command.name());
        for k in RunConfig::KEYS {
            writeln!(s, "# config {k}={}", self.config.get(k)).unwrap();
        }
        writeln!(s, "{}", self.columns.join(",")).unwrap();
        for r in &self.rows {
            writeln!(s, "{}", r.join(",")).unwrap();
        }
        for (k, v) in &self.summary {
            writeln!(s, "# summary {k}={v}").unwrap();
        }
        writeln!(s, "# status {}", self.status()).unwrap();
        s
    }
}

fn f(x: f64) -> String {
    format!("{x:.12e}")
}

/// Named graph or a path to a graph in the text format.
pub fn resolve_graph(name: &str) -> Result<StableGraph> {
    if let Some(g) = graphs::named(name) {
        return Ok(g);
    }
    match std::fs::read_to_string(name) {
        Ok(text) => StableGraph::from_text(&text),
        Err(_) => Err(Error::InvalidParameter(format!(
            "unknown graph {name:?}: expected bubble, theta, theta-tails, tadpole, tree, triangle, genus-one-loop or a graph file"
        ))),
    }
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    match cfg.command {
        Command::Graphs => run_graphs(cfg),
        Command::Wick => run_wick(cfg),
        Command::Cover => run_cover(cfg),
        Command::Weight => run_weight(cfg),
        Command::Counterterm => run_counterterm(cfg),
        Command::Expand => run_expand(cfg),
    }
}

fn run_graphs(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new(cfg, &["index", "vertices", "edges", "tails", "genus", "betti", "aut", "aut_bruteforce", "graph"]);
    let b = EnumerationBounds { max_genus: cfg.genus, tails: cfg.tails, max_edges: cfg.edges, max_euler: None, allowed: None };
    let list = graphs::enumerate_with(&b)?;
    let mut mismatches = 0;
    for (i, g) in list.iter().enumerate() {
        let aut = g.vertex_form().automorphism_order();
        let brute = g.automorphism_order_bruteforce().ok();
        if let Some(bf) = brute {
            if num_bigint::BigInt::from(bf) != aut {
                mismatches += 1;
            }
        }
        let text = g.to_text().lines().skip(1).collect::<Vec<_>>().join(" ");
        rep.row(vec![
            i.to_string(),
            g.num_vertices().to_string(),
            g.num_edges().to_string(),
            g.num_tails().to_string(),
            g.genus().to_string(),
            g.betti().to_string(),
            aut.to_string(),
            brute.map_or("-".into(), |v| v.to_string()),
            format!("\"{text}\""),
        ]);
    }
    rep.note("classes", list.len());
    rep.note("aut_mismatches", mismatches);
    rep.passed = mismatches == 0;
    Ok(rep)
}

fn run_wick(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new(cfg, &["m", "recursion", "closed", "quadrature", "rel_err"]);
    let alpha = ratio_to_f64(&cfg.alpha);
    let beta = ratio_to_f64(&cfg.beta);
    let mut worst: f64 = 0.0;
    for m in 0..=cfg.m {
        let w = wick::wick_general(m, &cfg.alpha, &cfg.beta, cfg.a, cfg.b)?;
        let q = adaptive_ext(
            |x| x.powi(m as i32) * (-alpha * x * x / 2.0 + beta * x).exp(),
            cfg.a.value(),
            cfg.b.value(),
            Tolerance::new(1e-300, 1e-13),
        )
        .value;
        let scale = q.abs().max(1e-300);
        let err = (w.value_closed - q).abs().max((w.value_recursion - q).abs()) / scale;
        let err = if q == 0.0 && w.value_closed.abs() < 1e-14 && w.value_recursion.abs() < 1e-14 { 0.0 } else { err };
        worst = worst.max(err);
        rep.row(vec![m.to_string(), f(w.value_recursion), f(w.value_closed), f(q), f(err)]);
    }
    rep.note("max_rel_err", f(worst));
    rep.passed = worst <= cfg.tol;
    Ok(rep)
}

fn run_cover(cfg: &RunConfig) -> Result<Report> {
    if !cfg.schedule.is_empty() && cfg.schedule[..=cfg.k] != default_schedule(cfg.k)[..=cfg.k] {
        return Err(Error::InvalidParameter("cover verification is implemented for the default schedule only".into()));
    }
    let mut rep = Report::new(cfg, &["check", "items", "failures"]);
    let c = cover::verify_cover(cfg.k, cfg.r, cfg.samples, cfg.seed)?;
    rep.row(vec!["covered_by_closure".into(), c.samples.to_string(), c.cover_failures.to_string()]);
    rep.row(vec!["strictly_inside_at_most_one".into(), c.samples.to_string(), c.double_memberships.to_string()]);
    let dj = cover::verify_disjoint(cfg.k, cfg.r, cfg.samples.min(10_000), cfg.seed)?;
    rep.row(vec!["disjoint_pairs_discharged".into(), dj.pairs.len().to_string(), dj.undischarged.to_string()]);
    let per = (cfg.samples / 10).clamp(1, 10_000);
    let ct = cover::verify_containment(cfg.k, cfg.r, per, cfg.seed)?;
    rep.row(vec!["region_inside_a_set".into(), ct.per_region.len().to_string(), ct.violations().to_string()]);
    let failures = c.cover_failures + c.double_memberships + dj.undischarged + ct.violations();
    rep.note("regions", c.assigned.len());
    rep.note("boundary_points", c.boundary_points);
    rep.note("containment_samples_per_region", ct.min_samples());
    rep.note("failures", failures);
    rep.passed = failures == 0;
    Ok(rep)
}

fn spec_for(cfg: &RunConfig, g: &StableGraph) -> Result<(LocalFunctionalSpec, Field)> {
    let spec = LocalFunctionalSpec::monomial(g, cfg.n, cfg.coupling);
    spec.validate(g)?;
    Ok((spec, Field::library(&cfg.field, cfg.n)?))
}

fn run_weight(cfg: &RunConfig) -> Result<Report> {
    let g = resolve_graph(&cfg.graph)?;
    if cfg.times.len() != g.num_edges() {
        return Err(Error::InvalidParameter(format!(
            "times lists {} values but graph {} has {} edges",
            cfg.times.len(),
            cfg.graph,
            g.num_edges()
        )));
    }
    let (spec, field) = spec_for(cfg, &g)?;
    let minimal = if g.betti() == 0 { 0 } else { renorm::minimal_order(&g, cfg.n, cfg.r, spec.interaction_order())? };
    let top = cfg.n_prime.unwrap_or(minimal);
    let all: Vec<usize> = (0..g.num_edges()).collect();
    let mut rep = Report::new(cfg, &["n_prime", "truncated", "full", "remainder", "tail_converged", "exponent"]);
    for np in 0..=top {
        let w = weights::f_gamma_truncated(&g, &cfg.times, &spec, &field, cfg.geometry, &[all.clone()], &[np])?;
        let e = if g.betti() == 0 {
            "-".into()
        } else {
            renorm::error_exponent(&g, cfg.n, cfg.r, np, spec.interaction_order(), cfg.geometry)?.to_string()
        };
        rep.row(vec![np.to_string(), f(w.truncated), f(w.full), f(w.remainder), w.tail_converged.to_string(), e]);
    }
    let closed = weights::f_gamma_closed(&g, &cfg.times, &spec, &field, cfg.geometry)?;
    rep.note("closed_form", f(closed));
    rep.note("minimal_n_prime", minimal);
    if g.betti() > 0 {
        // Remainder slope along the diagonal path for the selected order.
        let taus = [0.3, 0.2, 0.12, 0.07, 0.04, 0.02];
        let path = renorm::geometric_path(g.num_edges(), 0.0, &taus);
        let fit = renorm::measure_slope(&g, &spec, &field, top, cfg.geometry, &path)?;
        let predicted = ratio_to_f64(&renorm::error_exponent(&g, cfg.n, cfg.r, top, spec.interaction_order(), cfg.geometry)?);
        rep.note("slope", f(fit.slope));
        rep.note("predicted_exponent", f(predicted));
        rep.passed = fit.slope >= predicted - 0.1;
    }
    Ok(rep)
}

fn run_counterterm(cfg: &RunConfig) -> Result<Report> {
    if !cfg.schedule.is_empty() {
        return Err(Error::InvalidParameter("counterterms are built on the default schedule only".into()));
    }
    let g = resolve_graph(&cfg.graph)?;
    let (spec, field) = spec_for(cfg, &g)?;
    let js: Vec<u32> = (cfg.j_min..=cfg.j_max).collect();
    let rule = TimeRule { panel: cfg.panel, nodes: cfg.nodes };
    let ct = renorm::counterterm_report(&cfg.graph, &g, &spec, &field, cfg.geometry, cfg.r, &js, rule)?;
    let mut rep = Report::new(cfg, &["j", "eps", "w", "w_ct", "renormalized", "shell_w", "shell_renormalized"]);
    for r in &ct.rows {
        rep.row(vec![r.j.to_string(), f(r.eps), f(r.w), f(r.w_ct), f(r.renormalized), f(r.shell_w), f(r.shell_renormalized)]);
    }
    for c in &ct.chains {
        rep.note(&format!("chain s[{}]{}", c.sector.iter().map(|i| (i + 1).to_string()).collect::<String>(), c.label), format!("orders={:?} exponents=[{}]", c.orders, c.exponents.join("; ")));
    }
    let after = (cfg.j_min + 3).min(cfg.j_max - 1);
    let ratio = ct.min_ratio_after(after);
    rep.note("min_difference_ratio_after_j", format!("{after}:{}", f(ratio)));
    rep.passed = ratio >= 1.5;
    Ok(rep)
}

fn run_expand(cfg: &RunConfig) -> Result<Report> {
    let mut rep = Report::new(
        cfg,
        &["instance", "d", "graphs", "v_terms", "w_terms", "v_graphs_eq_v_direct", "exp_w_eq_v", "w_eq_log_v", "w_in_o_plus"],
    );
    let trunc = Truncation::new(cfg.order, cfg.degree, cfg.euler);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut failures = 0;
    for i in 0..cfg.instances {
        let int = expansion::random_interaction(&mut rng, cfg.d, &cfg.interaction, trunc);
        let p = expansion::random_propagator(&mut rng, cfg.d);
        let c = expansion::check_expansion(&p, &int, trunc)?;
        if !c.passed() {
            failures += 1;
        }
        rep.row(vec![
            i.to_string(),
            cfg.d.to_string(),
            c.graphs.to_string(),
            c.v_terms.to_string(),
            c.w_terms.to_string(),
            c.v_match.is_none().to_string(),
            c.exp_match.is_none().to_string(),
            c.log_match.is_none().to_string(),
            c.w_in_o_plus.to_string(),
        ]);
    }
    rep.note("failures", failures);
    rep.passed = failures == 0;
    Ok(rep)
}

/// Command-line surface. Every flag mirrors a config key.
#[derive(Parser, Debug)]
#[command(name = "hkrenorm", version, about = "Heat-kernel counterterms, graph expansions and Gaussian moments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Subcommand, Debug)]
pub enum CliCommand {
    /// Enumerate connected stable graphs with automorphism orders.
    Graphs(Flags),
    /// One-dimensional Gaussian moments: recursion and closed form vs quadrature.
    Wick(Flags),
    /// Sample the log-time cover: covering, disjointness, containment.
    Cover(Flags),
    /// Truncated weights of one graph at fixed times, with the remainder slope.
    Weight(Flags),
    /// Counterterm table on the ε grid.
    Counterterm(Flags),
    /// Graph sums against the operator expansion on random finite-dimensional data.
    Expand(Flags),
}

#[derive(Args, Debug, Default, Clone)]
pub struct Flags {
    /// `key = value` file applied before the flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the report here instead of stdout (`-` for stdout).
    #[arg(long)]
    pub output: Option<String>,
    /// `plane` or `halfspace`.
    #[arg(long)]
    pub geometry: Option<String>,
    /// Spatial dimension.
    #[arg(long)]
    pub n: Option<String>,
    /// Cover ratio R.
    #[arg(long)]
    pub r: Option<String>,
    /// Comma list of ε exponents j, or `default`.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Library name or path to a stable-graph text file.
    #[arg(long)]
    pub graph: Option<String>,
    /// Coefficient of the local functional.
    #[arg(long)]
    pub coupling: Option<String>,
    /// Allowed vertex types as `genus:valence` pairs.
    #[arg(long)]
    pub interaction: Option<String>,
    /// Test field from the field library.
    #[arg(long)]
    pub field: Option<String>,
    /// Taylor order N′, or `auto` for the minimal one.
    #[arg(long = "n-prime")]
    pub n_prime: Option<String>,
    /// Comma list of edge times.
    #[arg(long)]
    pub times: Option<String>,
    /// Maximum genus.
    #[arg(long)]
    pub genus: Option<String>,
    /// Number of tails.
    #[arg(long)]
    pub tails: Option<String>,
    /// Maximum number of edges.
    #[arg(long)]
    pub edges: Option<String>,
    /// Maximum monomial degree.
    #[arg(long)]
    pub m: Option<String>,
    /// Quadratic coefficient (rational).
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<String>,
    /// Linear coefficient (rational).
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    /// Lower endpoint (`-inf` allowed).
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<String>,
    /// Upper endpoint (`inf` allowed).
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
    /// Number of time variables.
    #[arg(long)]
    pub k: Option<String>,
    /// Monte Carlo samples.
    #[arg(long)]
    pub samples: Option<String>,
    /// Dimension of the toy field space.
    #[arg(long)]
    pub d: Option<String>,
    /// Maximum power of ħ kept.
    #[arg(long)]
    pub order: Option<String>,
    /// Maximum polynomial degree kept.
    #[arg(long)]
    pub degree: Option<String>,
    /// Maximum weight kept.
    #[arg(long)]
    pub euler: Option<String>,
    /// Number of random instances.
    #[arg(long)]
    pub instances: Option<String>,
    /// First ε exponent.
    #[arg(long = "j-min")]
    pub j_min: Option<String>,
    /// Last ε exponent.
    #[arg(long = "j-max")]
    pub j_max: Option<String>,
    /// Width of a quadrature panel in log time.
    #[arg(long)]
    pub panel: Option<String>,
    /// Gauss nodes per panel.
    #[arg(long)]
    pub nodes: Option<String>,
    /// Relative tolerance.
    #[arg(long)]
    pub tol: Option<String>,
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &String)> {
        let all: [(&'static str, &Option<String>); 32] = [
            ("output", &self.output),
            ("geometry", &self.geometry),
            ("n", &self.n),
            ("r", &self.r),
            ("schedule", &self.schedule),
            ("graph", &self.graph),
            ("coupling", &self.coupling),
            ("interaction", &self.interaction),
            ("field", &self.field),
            ("n_prime", &self.n_prime),
            ("times", &self.times),
            ("genus", &self.genus),
            ("tails", &self.tails),
            ("edges", &self.edges),
            ("m", &self.m),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("a", &self.a),
            ("b", &self.b),
            ("k", &self.k),
            ("samples", &self.samples),
            ("d", &self.d),
            ("order", &self.order),
            ("degree", &self.degree),
            ("euler", &self.euler),
            ("instances", &self.instances),
            ("j_min", &self.j_min),
            ("j_max", &self.j_max),
            ("panel", &self.panel),
            ("nodes", &self.nodes),
            ("tol", &self.tol),
            ("seed", &self.seed),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k, v))).collect()
    }
}

/// Defaults, then the config file, then flags.
pub fn resolve(command: Command, flags: &Flags) -> Result<RunConfig> {
    let mut cfg = RunConfig::defaults(command);
    if let Some(path) = &flags.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    for (k, v) in flags.pairs() {
        cfg.set(k, v).map_err(|e| Error::InvalidParameter(format!("--{}: {e}", k.replace('_', "-"))))?;
    }
    Ok(cfg)
}

/// Entry point of the binary. Exit status: 0 on PASS, 2 on FAIL, 1 on error.
pub fn main_with(cli: Cli) -> i32 {
    let (command, flags) = match &cli.command {
        CliCommand::Graphs(f) => (Command::Graphs, f),
        CliCommand::Wick(f) => (Command::Wick, f),
        CliCommand::Cover(f) => (Command::Cover, f),
        CliCommand::Weight(f) => (Command::Weight, f),
        CliCommand::Counterterm(f) => (Command::Counterterm, f),
        CliCommand::Expand(f) => (Command::Expand, f),
    };
    let outcome = resolve(command, flags).and_then(|cfg| run(&cfg).map(|rep| (cfg, rep)));
    match outcome {
        Ok((cfg, rep)) => {
            let text = rep.render();
            match &cfg.output {
                Some(path) => {
                    if let Err(e) = std::fs::write(path, &text) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return 1;
                    }
                    for (k, v) in &rep.summary {
                        println!("{k}: {v}");
                    }
                    println!("status: {}", rep.status());
                }
                None => print!("{text}"),
            }
            if rep.passed {
                0
            } else {
                2
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_and_flag_override() {
        let mut cfg = RunConfig::defaults(Command::Wick);
        cfg.apply_text("# moments\nm = 5\nalpha = 1/2\na = -1 # left end\nb = inf\n").unwrap();
        assert_eq!(cfg.m, 5);
        assert_eq!(cfg.a, Endpoint::Finite(-1.0));
        let mut again = RunConfig::defaults(Command::Wick);
        again.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(again, cfg);
        let flags = Flags { m: Some("3".into()), ..Default::default() };
        let dir = std::env::temp_dir().join("hkrenorm_cli_test.cfg");
        std::fs::write(&dir, "m = 5\nbeta = 1\n").unwrap();
        let flags = Flags { config: Some(dir.clone()), ..flags };
        let r = resolve(Command::Wick, &flags).unwrap();
        assert_eq!((r.m, r.beta.clone()), (3, Q::from_integer(1.into())));
        std::fs::remove_file(dir).ok();
    }

    #[test]
    fn errors_are_actionable() {
        let mut cfg = RunConfig::defaults(Command::Cover);
        let e = cfg.apply_text("k = 3\nradius = 4\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }));
        cfg.r = 2.0;
        assert!(run(&cfg).is_err());
        let mut other = RunConfig::defaults(Command::Expand);
        assert!(other.set("command", "cover").is_err());
    }

    #[test]
    fn reports_are_deterministic_and_embed_config() {
        let mut cfg = RunConfig::defaults(Command::Cover);
        cfg.samples = 2_000;
        let a = run(&cfg).unwrap();
        let b = run(&cfg).unwrap();
        assert_eq!(a.render(), b.render());
        assert!(a.passed);
        let text = a.render();
        assert!(text.starts_with("# hkrenorm-report v1 command=cover\n"));
        for k in RunConfig::KEYS {
            assert!(text.contains(&format!("# config {k}=")));
        }
        assert!(text.ends_with("# status PASS\n"));
    }

    #[test]
    fn small_runs_pass() {
        let mut w = RunConfig::defaults(Command::Wick);
        w.beta = Q::from_integer(1.into());
        w.a = Endpoint::Finite(-1.0);
        assert!(run(&w).unwrap().passed);
        let mut e = RunConfig::defaults(Command::Expand);
        e.order = 2;
        e.euler = 5;
        e.instances = 3;
        assert!(run(&e).unwrap().passed);
        let mut g = RunConfig::defaults(Command::Graphs);
        g.genus = 1;
        g.tails = 2;
        g.edges = 3;
        let rep = run(&g).unwrap();
        assert!(rep.passed && !rep.rows.is_empty());
    }
}
