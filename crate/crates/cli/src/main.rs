//! `contologic`: command-line front end for the exact continuous-logic workbench.
//!
//! Exit codes: 0 every check passed, 1 a check failed (witness in the report),
//! 2 usage or input error.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use contologic::chains::{self, DescendingChain, LazyChain};
use contologic::definable::{self, PartialPredicate};
use contologic::demo::{self, ExtRational};
use contologic::forge::{self, ForgeError};
use contologic::groups::{self, ApproxProduct, FiniteMetricGroup};
use contologic::metric::Grid;
use contologic::rational::dyadic_unit;
use contologic::topometric::{self, NodeId, NodeRelation, TreeClusterSpace};
use contologic::{
    check_structure, eval_formula, format_formula, format_rational, parse_formula, parse_rational, Assignment,
    FiniteStructure, Interpolation, PLMap, PointSet, Rational, TruthValue,
};

use report::{grid_json, metric_json, table_json, Report};

#[derive(Parser)]
#[command(name = "contologic", version, about = "Exact continuous first-order logic over finite metric structures")]
struct Cli {
    /// Emit the machine-readable JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Compare the emitted report with a stored one; exit 1 on any difference.
    #[arg(long, global = true, value_name = "PATH")]
    golden: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Step,
    Linear,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a structure file: metric axioms and declared moduli.
    CheckStructure {
        #[arg(long)]
        structure: PathBuf,
    },
    /// Evaluate a formula under an assignment `x=a,y=b`.
    Eval {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        formula: String,
        #[arg(long, default_value = "")]
        assign: String,
    },
    /// Decide whether a unary predicate is a distance predicate.
    CertifyDist {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        predicate: String,
    },
    /// Walk from a point towards the zero set of a distance predicate.
    Project {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        predicate: String,
        #[arg(long)]
        point: String,
        #[arg(long)]
        eps: String,
        /// Binary predicate whose sup over the zero set is also relativized.
        #[arg(long)]
        sup_predicate: Option<String>,
    },
    /// Build the predicate whose zero set certifies `φ ≤ 0 ⇒ ψ ≤ 0` on a set.
    ImplicationSet {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        phi: String,
        #[arg(long)]
        psi: String,
        /// Comma-separated labels.
        #[arg(long)]
        set: String,
    },
    /// Extend a partial predicate `a=v,b=w` with a modulus to the universe.
    ExtendPred {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        values: String,
        #[arg(long, default_value = "lipschitz 1")]
        modulus: String,
    },
    /// Realise a partial function `x=y,...` through the function-space sort.
    Embed {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        map: String,
        /// Binary predicate for φ₀; defaults to the graph table.
        #[arg(long)]
        phi0: Option<String>,
    },
    /// Turn a symmetric reflexive binary predicate into a pseudometric.
    RepairMetric {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, default_value = "phi")]
        predicate: String,
        #[arg(long, value_enum, default_value = "step")]
        mode: Mode,
    },
    /// The sup-based pseudometric `sup_z |φ(x,z) − φ(y,z)|`.
    RepairSup {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long, default_value = "phi")]
        predicate: String,
    },
    /// Extend a metric on a subset through a total binary predicate.
    ExtendMetric {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        set: String,
        /// Binary predicate ψ₁; its restriction to the set is `d₁`.
        #[arg(long)]
        psi1: String,
        /// Unary predicate with zero set equal to the set; prints the approximants.
        #[arg(long)]
        phi: Option<String>,
    },
    /// Moduli of uniform equivalence between the metric and a binary predicate.
    EquivModulus {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        other: String,
    },
    /// Replace the metric by a binary predicate; the old metric becomes `d2`.
    SwapMetric {
        #[arg(long)]
        structure: PathBuf,
        #[arg(long)]
        predicate: String,
    },
    /// Cantor-Bendixson ε-rank and degree.
    Rank {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        eps: String,
    },
    /// Locate `r′ < r` where the rank is locally constant.
    RankGrid {
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        r: String,
    },
    /// Check the rank transfer along a relation between two spaces.
    Transfer {
        #[arg(long)]
        space: PathBuf,
        /// Target space; defaults to the source.
        #[arg(long)]
        target: Option<PathBuf>,
        /// `identity`, `full`, or a JSON file of `[a, b]` node pairs.
        #[arg(long, default_value = "identity")]
        relation: String,
        /// Comma-separated node ids; defaults to every node.
        #[arg(long)]
        k: Option<String>,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        delta: String,
    },
    /// Verify the group axioms of a group file.
    GroupCheck {
        #[arg(long)]
        group: PathBuf,
    },
    /// Bi-invariant metric dominating the input metric.
    InvariantMetric {
        #[arg(long)]
        group: PathBuf,
    },
    /// Distance to a union of cosets of a subgroup.
    CosetDist {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        subgroup: String,
        #[arg(long)]
        point: String,
    },
    /// Audit the exact product of a group as an ε-approximate product.
    ApproxProduct {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        eps: String,
        /// Comma-separated labels of a subgroup to use as the carrier.
        #[arg(long)]
        carrier: Option<String>,
    },
    /// Translate the group far from itself and compare separation numbers.
    TranslateCopy {
        #[arg(long)]
        group: PathBuf,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        carrier: Option<String>,
        #[arg(long)]
        r: String,
        #[arg(long)]
        y0: String,
    },
    /// Stabilization, limit equivalence, chase and definable limit of a chain.
    Chain {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long)]
        eps: String,
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, default_value_t = 0)]
        m0: usize,
    },
    /// Pointwise limit of a nondecreasing family of unary predicates.
    FamilyLimit {
        #[arg(long)]
        structure: PathBuf,
        /// Comma-separated predicate names, in order.
        #[arg(long)]
        family: String,
        /// Comma-separated candidate predicate names.
        #[arg(long, default_value = "")]
        candidates: String,
    },
    /// Tabulate `P(qa)` for samples `r:q` (r may be `inf` or `-inf`).
    Demo {
        #[arg(long = "sample")]
        samples: Vec<String>,
    },
}

/// Input or usage problems; always exit 2.
struct InputError(String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

type Outcome = Result<Report, InputError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let report = match dispatch(&cli.command) {
        Ok(r) => r,
        Err(InputError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let text = report.render(cli.json);
    print!("{text}");
    if let Some(path) = &cli.golden {
        match fs::read_to_string(path) {
            Ok(stored) if stored == text => {}
            Ok(_) => {
                eprintln!("golden mismatch: {}", path.display());
                return ExitCode::from(1);
            }
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
    }
    ExitCode::from(if report.pass { 0 } else { 1 })
}

fn dispatch(cmd: &Command) -> Outcome {
    match cmd {
        Command::CheckStructure { structure } => cmd_check_structure(structure),
        Command::Eval {
            structure,
            formula,
            assign,
        } => cmd_eval(structure, formula, assign),
        Command::CertifyDist { structure, predicate } => cmd_certify(structure, predicate),
        Command::Project {
            structure,
            predicate,
            point,
            eps,
            sup_predicate,
        } => cmd_project(structure, predicate, point, eps, sup_predicate.as_deref()),
        Command::ImplicationSet { structure, phi, psi, set } => cmd_implication(structure, phi, psi, set),
        Command::ExtendPred {
            structure,
            values,
            modulus,
        } => cmd_extend_pred(structure, values, modulus),
        Command::Embed { structure, map, phi0 } => cmd_embed(structure, map, phi0.as_deref()),
        Command::RepairMetric {
            structure,
            predicate,
            mode,
        } => cmd_repair(structure, predicate, *mode),
        Command::RepairSup { structure, predicate } => cmd_repair_sup(structure, predicate),
        Command::ExtendMetric {
            structure,
            set,
            psi1,
            phi,
        } => cmd_extend_metric(structure, set, psi1, phi.as_deref()),
        Command::EquivModulus { structure, other } => cmd_equiv(structure, other),
        Command::SwapMetric { structure, predicate } => cmd_swap(structure, predicate),
        Command::Rank { space, eps } => cmd_rank(space, eps),
        Command::RankGrid { space, r } => cmd_rank_grid(space, r),
        Command::Transfer {
            space,
            target,
            relation,
            k,
            f,
            eps,
            delta,
        } => cmd_transfer(space, target.as_deref(), relation, k.as_deref(), f.as_deref(), eps, delta),
        Command::GroupCheck { group } => cmd_group_check(group),
        Command::InvariantMetric { group } => cmd_invariant(group),
        Command::CosetDist { group, subgroup, point } => cmd_coset(group, subgroup, point),
        Command::ApproxProduct { group, eps, carrier } => cmd_approx(group, eps, carrier.as_deref()),
        Command::TranslateCopy {
            group,
            eps,
            carrier,
            r,
            y0,
        } => cmd_translate(group, eps, carrier.as_deref(), r, y0),
        Command::Chain { chain, eps, x0, m0 } => cmd_chain(chain, eps, x0.as_deref(), *m0),
        Command::FamilyLimit {
            structure,
            family,
            candidates,
        } => cmd_family(structure, family, candidates),
        Command::Demo { samples } => cmd_demo(samples),
    }
}

// ---------- input helpers ----------

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))
}

fn load_structure(path: &Path) -> Result<FiniteStructure, InputError> {
    Ok(FiniteStructure::from_json(&read(path)?)?)
}

fn load_space(path: &Path) -> Result<TreeClusterSpace, InputError> {
    Ok(TreeClusterSpace::from_json(&read(path)?)?)
}

fn load_group(path: &Path) -> Result<FiniteMetricGroup, InputError> {
    Ok(FiniteMetricGroup::from_json(&read(path)?)?)
}

fn q(text: &str) -> Result<Rational, InputError> {
    parse_rational(text).map_err(|e| InputError(format!("bad rational {text:?}: {e}")))
}

fn items(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn point_set(m: &FiniteStructure, text: &str) -> Result<PointSet, InputError> {
    Ok(items(text).map(|l| m.element(l)).collect::<Result<_, _>>()?)
}

fn pairs(text: &str) -> Result<Vec<(&str, &str)>, InputError> {
    items(text)
        .map(|kv| kv.split_once('=').ok_or_else(|| InputError(format!("expected key=value, got {kv:?}"))))
        .collect()
}

fn node_set(text: Option<&str>, t: &TreeClusterSpace) -> Result<BTreeSet<NodeId>, InputError> {
    match text {
        None => Ok(t.node_ids().into_iter().collect()),
        Some(s) => Ok(items(s).map(|n| n.parse::<NodeId>()).collect::<Result<_, _>>()?),
    }
}

fn labels_of(set: &PointSet, m: &FiniteStructure) -> Vec<String> {
    set.iter().map(|&i| m.universe()[i].clone()).collect()
}

fn forge_outcome(verb: &'static str, e: ForgeError) -> Outcome {
    match e {
        ForgeError::NotSymmetric { .. }
        | ForgeError::NotReflexive { .. }
        | ForgeError::Shape(_)
        | ForgeError::NameClash(_)
        | ForgeError::ZeroSetMismatch => Err(InputError(e.to_string())),
        other => Ok(Report::new(verb, false, json!({ "error": other.to_string() }))),
    }
}

// ---------- logic_core ----------

fn cmd_check_structure(path: &Path) -> Outcome {
    let m = load_structure(path)?;
    let r = check_structure(&m);
    Ok(Report::new("check-structure", r.passed, serde_json::to_value(&r)?).line(format!("elements {}", m.size())))
}

fn cmd_eval(path: &Path, text: &str, assign: &str) -> Outcome {
    let m = load_structure(path)?;
    let f = parse_formula(text, &m.signature())?;
    let mut a = Assignment::new();
    for (var, label) in pairs(assign)? {
        a.insert(var.to_string(), m.element(label)?);
    }
    let value = eval_formula(&f, &m, &a)?;
    Ok(Report::new("eval", true, json!({ "formula": format_formula(&f), "value": value })).line(format!("value {value}")))
}

// ---------- definable_sets ----------

fn cmd_certify(path: &Path, name: &str) -> Outcome {
    let m = load_structure(path)?;
    let psi = m.unary_table(name)?;
    let cert = definable::certify_distance_predicate(&m.metric, &psi)?;
    let zeros = labels_of(&definable::zero_set(&psi), &m);
    Ok(Report::new(
        "certify-dist",
        cert.verdict.passed(),
        json!({ "predicate": name, "zero_set": zeros, "certificate": cert }),
    ))
}

fn cmd_project(path: &Path, name: &str, point: &str, eps: &str, sup: Option<&str>) -> Outcome {
    let m = load_structure(path)?;
    let psi = m.unary_table(name)?;
    let eps = q(eps)?;
    let x = m.element(point)?;
    let cert = definable::certify_distance_predicate(&m.metric, &psi)?;
    if !cert.verdict.passed() {
        return Ok(Report::new("project", false, json!({ "certificate": cert })).line("predicate is not a distance predicate"));
    }
    let p = definable::project_to_zero_set(&m.metric, &psi, x, &eps)?;
    let bound = psi[x].value() + &eps * Rational::from_integer(4.into());
    let mut pass = psi[p.target].is_zero() && p.distance.value() <= &bound;
    let mut body = json!({ "projection": p });
    if let Some(sup) = sup {
        let phi = m.binary_table(sup)?;
        let (zeta, audit) = definable::relativized_sup(&m.metric, &phi, &definable::zero_set(&psi), &eps)?;
        pass &= audit.sandwich_holds;
        body["relativized"] = json!({ "zeta": grid_json(&zeta, m.universe(), m.universe()), "audit": audit });
    }
    Ok(Report::new("project", pass, body))
}

fn cmd_implication(path: &Path, phi: &str, psi: &str, set: &str) -> Outcome {
    let m = load_structure(path)?;
    let set = point_set(&m, set)?;
    let r = definable::implication_zero_set(m.universe(), &m.unary_table(phi)?, &m.unary_table(psi)?, &set)?;
    Ok(Report::new("implication-set", r.vanishes_on_set, serde_json::to_value(&r)?))
}

fn cmd_extend_pred(path: &Path, values: &str, modulus: &str) -> Outcome {
    let m = load_structure(path)?;
    let modulus = PLMap::parse_lipschitz(modulus)?;
    let mut known = BTreeMap::new();
    for (label, v) in pairs(values)? {
        known.insert(m.element(label)?, v.parse::<TruthValue>()?);
    }
    let out = definable::extend_partial_predicate(&m.metric, &PartialPredicate { values: known, modulus })?;
    Ok(Report::new("extend-pred", true, json!({ "extension": table_json(m.universe(), &out) })))
}

fn cmd_embed(path: &Path, map: &str, phi0: Option<&str>) -> Outcome {
    let m = load_structure(path)?;
    let mut f = BTreeMap::new();
    for (x, y) in pairs(map)? {
        f.insert(m.element(x)?, m.element(y)?);
    }
    let phi0 = match phi0 {
        Some(name) => m.binary_table(name)?,
        None => definable::default_graph_table(&m.metric, &f),
    };
    let e = definable::canonical_embed(&m.metric, &f, &phi0)?;
    let label_of = |i: &usize| e.sort_metric.label(*i).to_string();
    Ok(Report::new(
        "embed",
        e.audit.passed(),
        json!({
            "sort_size": e.sort.len(),
            "sort_metric": metric_json(&e.sort_metric),
            "theta": table_json(m.universe(), &e.theta.iter().map(label_of).collect::<Vec<_>>()),
            "f_hat": table_json(m.universe(), &e.f_hat.iter().map(label_of).collect::<Vec<_>>()),
            "phi": grid_json(&e.phi, m.universe(), m.universe()),
            "audit": e.audit,
        }),
    ))
}

// ---------- metric_forge ----------

fn cmd_repair(path: &Path, name: &str, mode: Mode) -> Outcome {
    let m = load_structure(path)?;
    let phi = m.binary_table(name)?;
    let mode = match mode {
        Mode::Step => Interpolation::StepLeft,
        Mode::Linear => Interpolation::Linear,
    };
    match forge::repair_pseudometric(m.universe(), &phi, mode) {
        Ok(cert) => {
            let table = cert.table.to_metric_table(m.universe().to_vec());
            let pass = cert.pseudometric && cert.h_zero_at_zero && cert.h_dominates_identity;
            Ok(Report::new(
                "repair-metric",
                pass,
                json!({ "certificate": cert, "table": metric_json(&table) }),
            )
            .line(format!("level {}", cert.level)))
        }
        Err(e) => forge_outcome("repair-metric", e),
    }
}

fn cmd_repair_sup(path: &Path, name: &str) -> Outcome {
    let m = load_structure(path)?;
    match forge::repair_via_sup(m.universe(), &m.binary_table(name)?) {
        Ok(d) => Ok(Report::new(
            "repair-sup",
            d.is_pseudometric(),
            json!({ "table": metric_json(&d), "separates_points": d.separates_points() }),
        )),
        Err(e) => forge_outcome("repair-sup", e),
    }
}

fn cmd_extend_metric(path: &Path, set: &str, psi1: &str, phi: Option<&str>) -> Outcome {
    let m = load_structure(path)?;
    let set = point_set(&m, set)?;
    let psi1 = m.binary_table(psi1)?;
    let xs: Vec<usize> = set.iter().copied().collect();
    let d1 = Grid::from_fn(xs.len(), xs.len(), |a, b| psi1.get(xs[a], xs[b]).clone());
    let ext = match forge::extend_partial_metric(&m.metric, &set, &d1, &psi1) {
        Ok(e) => e,
        Err(e) => return forge_outcome("extend-metric", e),
    };
    let mut pass = ext.pseudometric.is_pseudometric();
    let mut body = json!({
        "set": labels_of(&set, &m),
        "pseudometric": metric_json(&ext.pseudometric),
        "metric": ext.metric.as_ref().map(metric_json),
    });
    if let Some(phi) = phi {
        let phi = m.unary_table(phi)?;
        let stable = forge::stabilization_index(&phi);
        let mut steps = Vec::new();
        let mut prev: Option<contologic::MetricTable> = None;
        for n in 0..=stable {
            let dn = match forge::approximating_pseudometric(m.universe(), &set, &psi1, &phi, n) {
                Ok(d) => d,
                Err(e) => return forge_outcome("extend-metric", e),
            };
            if let Some(p) = &prev {
                pass &= (0..m.size()).all(|x| (0..m.size()).all(|y| dn.d(x, y) <= p.d(x, y)));
            }
            steps.push(json!({ "n": n, "table": metric_json(&dn) }));
            prev = Some(dn);
        }
        pass &= prev.as_ref() == Some(&ext.pseudometric);
        body["stabilization_index"] = json!(stable);
        body["approximants"] = Value::Array(steps);
    }
    Ok(Report::new("extend-metric", pass, body))
}

fn cmd_equiv(path: &Path, other: &str) -> Outcome {
    let m = load_structure(path)?;
    let d2 = m.binary_table(other)?.to_metric_table(m.universe().to_vec());
    match forge::uniform_equivalence_modulus(&m.metric, &d2) {
        Ok((a, b)) => Ok(Report::new("equiv-modulus", true, json!({ "d1_to_d2": a, "d2_to_d1": b }))),
        Err(e) => forge_outcome("equiv-modulus", e),
    }
}

fn cmd_swap(path: &Path, name: &str) -> Outcome {
    let m = load_structure(path)?;
    let d1 = m.binary_table(name)?.to_metric_table(m.universe().to_vec());
    match forge::swap_metric(&m, &d1) {
        Ok(s) => Ok(Report::new("swap-metric", true, json!({ "structure": s.to_json_value() }))),
        Err(e) => forge_outcome("swap-metric", e),
    }
}

// ---------- topometric_ranks ----------

fn cmd_rank(path: &Path, eps: &str) -> Outcome {
    let t = load_space(path)?;
    let r = topometric::cb_rank_degree(&t, &q(eps)?)?;
    let show = |v: Option<usize>| v.map_or_else(|| "none".to_string(), |x| x.to_string());
    Ok(Report::new("rank", true, serde_json::to_value(&r)?)
        .line(format!("rank {}", show(r.rank)))
        .line(format!("degree {}", show(r.degree))))
}

fn cmd_rank_grid(path: &Path, r: &str) -> Outcome {
    let t = load_space(path)?;
    let g = topometric::rank_grid(&t, &q(r)?)?;
    let pass = g.trace.len() <= t.scales().len() + 2;
    Ok(Report::new("rank-grid", pass, serde_json::to_value(&g)?)
        .line(format!("r' {}", format_rational(&g.r_prime)))
        .line(format!("eps {}", format_rational(&g.eps))))
}

fn cmd_transfer(
    space: &Path,
    target: Option<&Path>,
    relation: &str,
    k: Option<&str>,
    f: Option<&str>,
    eps: &str,
    delta: &str,
) -> Outcome {
    let x = load_space(space)?;
    let y = match target {
        Some(p) => load_space(p)?,
        None => x.clone(),
    };
    let r = match relation {
        "identity" => NodeRelation::identity(&x),
        "full" => NodeRelation::full(&x, &y),
        file => {
            let raw: Vec<(String, String)> = serde_json::from_str(&read(Path::new(file))?)?;
            let pairs = raw
                .iter()
                .map(|(a, b)| Ok((a.parse::<NodeId>()?, b.parse::<NodeId>()?)))
                .collect::<Result<_, InputError>>()?;
            NodeRelation { pairs }
        }
    };
    let k = node_set(k, &x)?;
    let f = node_set(f, &y)?;
    let rep = topometric::verify_transfer(&x, &y, &r, &k, &f, &q(eps)?, &q(delta)?)?;
    Ok(Report::new("transfer", rep.conclusion != Some(false), serde_json::to_value(&rep)?))
}

// ---------- stable_groups ----------

fn cmd_group_check(path: &Path) -> Outcome {
    let g = load_group(path)?;
    let r = groups::check_group(&g);
    Ok(Report::new("group-check", r.passed, serde_json::to_value(&r)?))
}

fn cmd_invariant(path: &Path) -> Outcome {
    let g = load_group(path)?;
    let inv = groups::invariant_metric(&g)?;
    let f = &inv.flags;
    let pass = f.left && f.right && f.inverse && inv.dominates_input;
    Ok(Report::new(
        "invariant-metric",
        pass,
        json!({
            "metric": metric_json(&inv.metric),
            "flags": inv.flags,
            "dominates_input": inv.dominates_input,
            "variant_invariant": inv.variant_invariant,
            "note": inv.note,
        }),
    ))
}

fn cmd_coset(path: &Path, subgroup: &str, point: &str) -> Outcome {
    let g = load_group(path)?;
    let h = point_set(&g.structure, subgroup)?;
    let x = g.structure.element(point)?;
    let r = groups::coset_union_distance(&g, &h, x)?;
    Ok(Report::new("coset-dist", true, serde_json::to_value(&r)?))
}

fn load_subgroup(path: &Path, carrier: Option<&str>) -> Result<FiniteMetricGroup, InputError> {
    let g = load_group(path)?;
    match carrier {
        None => Ok(g),
        Some(c) => {
            let set = point_set(&g.structure, c)?;
            Ok(g.with_carrier(&set))
        }
    }
}

fn cmd_approx(path: &Path, eps: &str, carrier: Option<&str>) -> Outcome {
    let ap = ApproxProduct::exact(load_subgroup(path, carrier)?, q(eps)?)?;
    let audit = groups::audit_approx_product(&ap);
    Ok(Report::new("approx-product", audit.certified, serde_json::to_value(&audit)?))
}

fn cmd_translate(path: &Path, eps: &str, carrier: Option<&str>, r: &str, y0: &str) -> Outcome {
    let g = load_subgroup(path, carrier)?;
    let y0 = g.structure.element(y0)?;
    let ap = ApproxProduct::exact(g, q(eps)?)?;
    let (z, rep) = groups::translate_copy(&ap, y0, &q(r)?, &q(eps)?)?;
    let pass = rep.far && rep.separation_transfers;
    Ok(Report::new(
        "translate-copy",
        pass,
        json!({ "copy": labels_of(&z, &ap.group.structure), "report": rep }),
    ))
}

// ---------- chains ----------

fn cmd_chain(path: &Path, eps: &str, x0: Option<&str>, m0: usize) -> Outcome {
    let text = read(path)?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let file: chains::ChainFile = serde_json::from_str(&text)?;
    let structure = load_structure(&dir.join(&file.structure))?;
    let c = DescendingChain::from_json(&text, |_| Ok(structure))?;
    let eps = q(eps)?;
    let stab = chains::approx_stabilizes(&c, &eps)?;
    let equiv = chains::limit_equivalence(&c, &eps)?;
    let steps = c.horizon() + c.metric().len() + 70 + m0;
    let n_m: Vec<usize> = (0..=steps + m0 + 2)
        .map(|k| chains::approx_stabilizes(&c, &dyadic_unit(k as u32)).map(|s| s.alpha))
        .collect::<Result<_, _>>()?;
    let first = c.member(n_m[m0 + 1]);
    let x0 = match x0 {
        Some(l) => c.structure.element(l)?,
        None => *first.iter().next().expect("members are nonempty"),
    };
    let chase = chains::chase_limit_point(&c, &|k| n_m[k.min(n_m.len() - 1)], x0, m0);
    let limit = chains::definable_limit(&c)?;
    let chase_ok = chase.as_ref().is_ok_and(|ch| ch.within_bound);
    let pass = equiv.equivalent && chase_ok && limit.certified;
    Ok(Report::new(
        "chain",
        pass,
        json!({
            "stabilization": stab,
            "limit_equivalence": equiv,
            "chase": match chase {
                Ok(ch) => json!(ch),
                Err(e) => json!({ "error": e.to_string() }),
            },
            "definable_limit": limit,
        }),
    ))
}

fn cmd_family(path: &Path, family: &str, candidates: &str) -> Outcome {
    let m = load_structure(path)?;
    let fam = items(family).map(|n| m.unary_table(n)).collect::<Result<Vec<_>, _>>()?;
    let cands = items(candidates)
        .map(|n| Ok((n.to_string(), m.unary_table(n)?)))
        .collect::<Result<Vec<_>, InputError>>()?;
    let r = chains::uniform_family_limit(&m.metric, &fam, &cands)?;
    Ok(Report::new("family-limit", r.zero_sets_agree, serde_json::to_value(&r)?))
}

// ---------- demo ----------

fn cmd_demo(samples: &[String]) -> Outcome {
    let samples = if samples.is_empty() {
        demo::default_samples()
    } else {
        samples
            .iter()
            .map(|s| {
                let (r, qv) = s
                    .split_once(':')
                    .ok_or_else(|| InputError(format!("expected r:q, got {s:?}")))?;
                Ok((r.parse::<ExtRational>()?, q(qv)?))
            })
            .collect::<Result<Vec<_>, InputError>>()?
    };
    let rows = demo::demo_table(&samples);
    let mut rep = Report::new("demo", true, json!({ "rows": rows }));
    for row in &rows {
        rep = rep.line(format!("r={} q={} qr={} P(qa)={}", row.r, format_rational(&row.q), row.qr, row.value));
    }
    Ok(rep)
}
