//! Symbolic layer: typed predicates, states of ground atoms, parametrized
//! action schemas with constraints, preconditions, effects and costs, and
//! the problem definition tying them to a concrete world.
//!
//! Discrete parameters (objects, surfaces, buttons) are ground during task
//! search; continuous parameters (configurations, grasps, placements,
//! presses, trajectories) stay symbolic and become CSP variables.

use crate::geometry::{Box2, KinematicChain, Pose2, SphereSet};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ParamType {
    Conf,
    Traj,
    Obj,
    Grasp,
    Placement,
    Surface,
    Button,
    Press,
}

impl ParamType {
    pub fn is_continuous(self) -> bool {
        !matches!(self, ParamType::Obj | ParamType::Surface | ParamType::Button)
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamType::Conf => "conf",
            ParamType::Traj => "traj",
            ParamType::Obj => "obj",
            ParamType::Grasp => "grasp",
            ParamType::Placement => "placement",
            ParamType::Surface => "surface",
            ParamType::Button => "button",
            ParamType::Press => "press",
        }
    }

    pub fn from_name(s: &str) -> Option<ParamType> {
        Some(match s {
            "conf" => ParamType::Conf,
            "traj" => ParamType::Traj,
            "obj" => ParamType::Obj,
            "grasp" => ParamType::Grasp,
            "placement" => ParamType::Placement,
            "surface" => ParamType::Surface,
            "button" => ParamType::Button,
            "press" => ParamType::Press,
            _ => return None,
        })
    }
}

/// Globally unique id of a continuous plan variable.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub struct VarId(pub u64);

/// A continuous term: either a free plan variable or a bound constant
/// indexing into the problem's constant table.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum ContTerm {
    Var(VarId),
    Const(usize),
}

/// Argument of a ground atom or ground action.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GroundArg {
    /// A discrete constant, referenced by name.
    Sym(String),
    /// A continuous term.
    Cont(ContTerm),
}

impl GroundArg {
    pub fn as_cont(&self) -> Option<ContTerm> {
        match self {
            GroundArg::Cont(t) => Some(*t),
            GroundArg::Sym(_) => None,
        }
    }
}

/// A ground atom: predicate applied to ground arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub pred: String,
    pub args: Vec<GroundArg>,
}

impl GroundAtom {
    pub fn new(pred: &str, args: Vec<GroundArg>) -> Self {
        Self {
            pred: pred.to_string(),
            args,
        }
    }

    pub fn nullary(pred: &str) -> Self {
        Self::new(pred, vec![])
    }
}

/// A symbolic state: a set of ground atoms, no duplicates.
pub type State = BTreeSet<GroundAtom>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredicateDecl {
    pub name: String,
    pub params: Vec<ParamType>,
}

/// Template atom inside a schema; arguments name schema parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomTemplate {
    pub pred: String,
    pub args: Vec<String>,
}

impl AtomTemplate {
    pub fn new(pred: &str, args: &[&str]) -> Self {
        Self {
            pred: pred.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub positive: bool,
    pub atom: AtomTemplate,
}

impl Literal {
    pub fn pos(pred: &str, args: &[&str]) -> Self {
        Self {
            positive: true,
            atom: AtomTemplate::new(pred, args),
        }
    }
    pub fn neg(pred: &str, args: &[&str]) -> Self {
        Self {
            positive: false,
            atom: AtomTemplate::new(pred, args),
        }
    }
}

/// How a parameter gets its binding when the action is ground during
/// search: inputs unify with the current state, outputs are fresh
/// variables (continuous) or enumerated declarations (discrete).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Binding {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub ptype: ParamType,
    pub binding: Binding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<ParamSpec>,
    pub con: Vec<AtomTemplate>,
    pub pre: Vec<Literal>,
    pub eff: Vec<Literal>,
    pub cost: Vec<AtomTemplate>,
}

impl ActionSchema {
    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    /// Every variable in con/pre/eff/cost must appear in the parameter
    /// list, and no atom may be both added and deleted.
    pub fn validate(&self) -> Result<(), String> {
        let mut check = |atom: &AtomTemplate| -> Result<(), String> {
            for a in &atom.args {
                if self.param_index(a).is_none() {
                    return Err(format!(
                        "action {}: `{a}` in {} is not a parameter",
                        self.name, atom.pred
                    ));
                }
            }
            Ok(())
        };
        for a in &self.con {
            check(a)?;
        }
        for l in &self.pre {
            check(&l.atom)?;
        }
        for l in &self.eff {
            check(&l.atom)?;
        }
        for a in &self.cost {
            check(a)?;
        }
        for add in self.eff.iter().filter(|l| l.positive) {
            for del in self.eff.iter().filter(|l| !l.positive) {
                if add.atom == del.atom {
                    return Err(format!(
                        "action {}: {} both added and deleted",
                        self.name, add.atom.pred
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A schema instantiated with ground arguments. Discrete parameters are
/// bound to names; continuous parameters to variables or constants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<GroundArg>,
}

impl GroundAction {
    pub fn arg(&self, schema: &ActionSchema, param: &str) -> &GroundArg {
        &self.args[schema
            .param_index(param)
            .unwrap_or_else(|| panic!("{} has no parameter {param}", schema.name))]
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.schema)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            match a {
                GroundArg::Sym(s) => write!(f, "{s}")?,
                GroundArg::Cont(ContTerm::Var(v)) => write!(f, "x{}", v.0)?,
                GroundArg::Cont(ContTerm::Const(c)) => write!(f, "k{c}")?,
            }
        }
        write!(f, ")")
    }
}

/// Instantiate a template atom under a ground action's bindings.
pub fn instantiate_atom(
    schema: &ActionSchema,
    action: &GroundAction,
    template: &AtomTemplate,
) -> GroundAtom {
    GroundAtom {
        pred: template.pred.clone(),
        args: template
            .args
            .iter()
            .map(|p| action.arg(schema, p).clone())
            .collect(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DomainError {
    #[error("unknown action schema `{0}`")]
    UnknownSchema(String),
    #[error("action {0} is not applicable in this state")]
    Inapplicable(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

/// The full action vocabulary plus predicate declarations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    pub predicates: Vec<PredicateDecl>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    pub fn schema(&self, name: &str) -> Result<&ActionSchema, DomainError> {
        self.actions
            .iter()
            .find(|a| a.name == name)
            .ok_or_else(|| DomainError::UnknownSchema(name.to_string()))
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| p.name == name)
    }
}

/// True iff every positive precondition holds and no negative one does.
/// The action must be ground on its discrete parameters; continuous
/// parameters may remain symbolic variables.
pub fn applicable(domain: &Domain, state: &State, action: &GroundAction) -> bool {
    let schema = domain
        .schema(&action.schema)
        .expect("action references unknown schema");
    for (spec, arg) in schema.params.iter().zip(&action.args) {
        if !spec.ptype.is_continuous() {
            assert!(
                matches!(arg, GroundArg::Sym(_)),
                "discrete parameter {} of {} is not ground",
                spec.name,
                schema.name
            );
        }
    }
    schema.pre.iter().all(|lit| {
        let atom = instantiate_atom(schema, action, &lit.atom);
        state.contains(&atom) == lit.positive
    })
}

/// Apply a ground action: remove delete effects, insert add effects.
pub fn apply(domain: &Domain, state: &State, action: &GroundAction) -> Result<State, DomainError> {
    if !applicable(domain, state, action) {
        return Err(DomainError::Inapplicable(action.to_string()));
    }
    let schema = domain.schema(&action.schema)?;
    let mut next = state.clone();
    for lit in schema.eff.iter().filter(|l| !l.positive) {
        next.remove(&instantiate_atom(schema, action, &lit.atom));
    }
    for lit in schema.eff.iter().filter(|l| l.positive) {
        next.insert(instantiate_atom(schema, action, &lit.atom));
    }
    Ok(next)
}

/// Build the dummy action that carries costs over the goal state. Its
/// preconditions are the goal-state atoms (binding the parameters the cost
/// atoms reference), it has no effects, and it is appended as the final
/// action of candidate plan skeletons.
pub fn make_goal_cost_action(
    name: &str,
    goal_pre: Vec<AtomTemplate>,
    params: Vec<ParamSpec>,
    cost: Vec<AtomTemplate>,
) -> Result<ActionSchema, DomainError> {
    let schema = ActionSchema {
        name: name.to_string(),
        params,
        con: vec![],
        pre: goal_pre
            .into_iter()
            .map(|atom| Literal {
                positive: true,
                atom,
            })
            .collect(),
        eff: vec![],
        cost,
    };
    // Every cost parameter must be bound by some precondition.
    for c in &schema.cost {
        for arg in &c.args {
            let bound = schema
                .pre
                .iter()
                .any(|l| l.atom.args.iter().any(|a| a == arg));
            if !bound {
                return Err(DomainError::Invalid(format!(
                    "cost parameter `{arg}` is not bound by any goal precondition"
                )));
            }
        }
    }
    schema.validate().map_err(DomainError::Invalid)?;
    Ok(schema)
}

/// Pairwise-distance goal-cost schema over the placements of `n` objects.
pub fn min_obj_dist_schema(objects: &[String]) -> ActionSchema {
    let mut params = Vec::new();
    let mut pre = Vec::new();
    let mut cost = Vec::new();
    for (i, _) in objects.iter().enumerate() {
        params.push(ParamSpec {
            name: format!("o{i}"),
            ptype: ParamType::Obj,
            binding: Binding::Input,
        });
        params.push(ParamSpec {
            name: format!("p{i}"),
            ptype: ParamType::Placement,
            binding: Binding::Input,
        });
        pre.push(AtomTemplate::new(
            "AtPlacement",
            &[&format!("o{i}"), &format!("p{i}")],
        ));
    }
    for i in 0..objects.len() {
        for j in (i + 1)..objects.len() {
            cost.push(AtomTemplate::new(
                "Dist",
                &[&format!("p{i}"), &format!("p{j}")],
            ));
        }
    }
    make_goal_cost_action("MinimizeObjDist", pre, params, cost)
        .expect("pairwise goal cost schema is well formed")
}

fn p(name: &str, ptype: ParamType, binding: Binding) -> ParamSpec {
    ParamSpec {
        name: name.to_string(),
        ptype,
        binding,
    }
}

/// The built-in pick/place/press domain.
///
/// Motion actions certify a `ReadyToAct` token that each manipulation and
/// press action consumes, so every pick, place, or press is preceded by a
/// move to a fresh configuration.
pub fn builtin_domain() -> Domain {
    use Binding::{Input, Output};
    use ParamType::*;

    let predicates = vec![
        PredicateDecl {
            name: "AtConf".into(),
            params: vec![Conf],
        },
        PredicateDecl {
            name: "HandEmpty".into(),
            params: vec![],
        },
        PredicateDecl {
            name: "AtPlacement".into(),
            params: vec![Obj, Placement],
        },
        PredicateDecl {
            name: "Holding".into(),
            params: vec![Obj, Grasp],
        },
        PredicateDecl {
            name: "On".into(),
            params: vec![Obj, Surface],
        },
        PredicateDecl {
            name: "IsStick".into(),
            params: vec![Obj],
        },
        PredicateDecl {
            name: "Pressed".into(),
            params: vec![Button],
        },
        PredicateDecl {
            name: "ReadyToAct".into(),
            params: vec![],
        },
    ];

    let move_free = ActionSchema {
        name: "MoveFree".into(),
        params: vec![
            p("q1", Conf, Input),
            p("q2", Conf, Output),
            p("t", Traj, Output),
        ],
        con: vec![
            AtomTemplate::new("Motion", &["q1", "t", "q2"]),
            AtomTemplate::new("CFreeTraj", &["t"]),
        ],
        pre: vec![Literal::pos("AtConf", &["q1"]), Literal::pos("HandEmpty", &[])],
        eff: vec![
            Literal::pos("AtConf", &["q2"]),
            Literal::neg("AtConf", &["q1"]),
            Literal::pos("ReadyToAct", &[]),
        ],
        cost: vec![AtomTemplate::new("TrajLength", &["t"])],
    };

    let pick = ActionSchema {
        name: "Pick".into(),
        params: vec![
            p("o", Obj, Input),
            p("g", Grasp, Output),
            p("p", Placement, Input),
            p("q", Conf, Input),
        ],
        con: vec![
            AtomTemplate::new("Kin", &["q", "o", "g", "p"]),
            AtomTemplate::new("Grasp", &["o", "g"]),
            AtomTemplate::new("CFreeHold", &["o", "g", "q"]),
        ],
        pre: vec![
            Literal::pos("HandEmpty", &[]),
            Literal::pos("AtConf", &["q"]),
            Literal::pos("AtPlacement", &["o", "p"]),
            Literal::pos("ReadyToAct", &[]),
        ],
        eff: vec![
            Literal::pos("Holding", &["o", "g"]),
            Literal::neg("HandEmpty", &[]),
            Literal::neg("AtPlacement", &["o", "p"]),
            Literal::neg("ReadyToAct", &[]),
        ],
        cost: vec![],
    };

    let move_hold = ActionSchema {
        name: "MoveHold".into(),
        params: vec![
            p("o", Obj, Input),
            p("g", Grasp, Input),
            p("q1", Conf, Input),
            p("q2", Conf, Output),
            p("t", Traj, Output),
        ],
        con: vec![
            AtomTemplate::new("Motion", &["q1", "t", "q2"]),
            AtomTemplate::new("CFreeTrajHold", &["o", "g", "t"]),
        ],
        pre: vec![
            Literal::pos("AtConf", &["q1"]),
            Literal::pos("Holding", &["o", "g"]),
        ],
        eff: vec![
            Literal::pos("AtConf", &["q2"]),
            Literal::neg("AtConf", &["q1"]),
            Literal::pos("ReadyToAct", &[]),
        ],
        cost: vec![AtomTemplate::new("TrajLength", &["t"])],
    };

    let place = ActionSchema {
        name: "Place".into(),
        params: vec![
            p("o", Obj, Input),
            p("g", Grasp, Input),
            p("p", Placement, Output),
            p("s", Surface, Output),
            p("q", Conf, Input),
        ],
        con: vec![
            AtomTemplate::new("Kin", &["q", "o", "g", "p"]),
            AtomTemplate::new("StablePlace", &["o", "p", "s"]),
            AtomTemplate::new("CFreePlace", &["o", "p"]),
        ],
        pre: vec![
            Literal::pos("Holding", &["o", "g"]),
            Literal::pos("AtConf", &["q"]),
            Literal::pos("ReadyToAct", &[]),
        ],
        eff: vec![
            Literal::pos("HandEmpty", &[]),
            Literal::pos("AtPlacement", &["o", "p"]),
            Literal::pos("On", &["o", "s"]),
            Literal::neg("Holding", &["o", "g"]),
            Literal::neg("ReadyToAct", &[]),
        ],
        cost: vec![],
    };

    let press = ActionSchema {
        name: "PressButton".into(),
        params: vec![
            p("b", Button, Output),
            p("p", Press, Output),
            p("q", Conf, Input),
        ],
        con: vec![
            AtomTemplate::new("Kin", &["q", "b", "p"]),
            AtomTemplate::new("ValidPress", &["b", "p", "q"]),
        ],
        pre: vec![
            Literal::pos("HandEmpty", &[]),
            Literal::pos("AtConf", &["q"]),
            Literal::pos("ReadyToAct", &[]),
        ],
        eff: vec![
            Literal::pos("Pressed", &["b"]),
            Literal::neg("ReadyToAct", &[]),
        ],
        cost: vec![],
    };

    let press_stick = ActionSchema {
        name: "PressButtonStick".into(),
        params: vec![
            p("b", Button, Output),
            p("o", Obj, Input),
            p("g", Grasp, Input),
            p("p", Press, Output),
            p("q", Conf, Input),
        ],
        con: vec![
            AtomTemplate::new("Kin", &["q", "o", "g", "p"]),
            AtomTemplate::new("ValidStickPress", &["o", "g", "p", "b"]),
        ],
        pre: vec![
            Literal::pos("IsStick", &["o"]),
            Literal::pos("Holding", &["o", "g"]),
            Literal::pos("AtConf", &["q"]),
            Literal::pos("ReadyToAct", &[]),
        ],
        eff: vec![
            Literal::pos("Pressed", &["b"]),
            Literal::neg("ReadyToAct", &[]),
        ],
        cost: vec![],
    };

    let domain = Domain {
        predicates,
        actions: vec![move_free, pick, move_hold, place, press, press_stick],
    };
    for a in &domain.actions {
        a.validate().expect("builtin schema must validate");
    }
    domain
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for pred in &self.predicates {
            write!(f, "predicate {}(", pred.name)?;
            for (i, t) in pred.params.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", t.name())?;
            }
            writeln!(f, ")")?;
        }
        let fmt_atoms = |f: &mut fmt::Formatter<'_>, label: &str, atoms: &[String]| {
            writeln!(f, "  {label}: [{}]", atoms.join(", "))
        };
        for a in &self.actions {
            write!(f, "action {}(", a.name)?;
            for (i, pspec) in a.params.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                let marker = if pspec.binding == Binding::Output { "!" } else { "" };
                write!(f, "{}: {}{marker}", pspec.name, pspec.ptype.name())?;
            }
            writeln!(f, ")")?;
            let tmpl = |t: &AtomTemplate| format!("{}({})", t.pred, t.args.join(", "));
            fmt_atoms(f, "con", &a.con.iter().map(tmpl).collect::<Vec<_>>())?;
            fmt_atoms(
                f,
                "pre",
                &a.pre
                    .iter()
                    .map(|l| {
                        let s = tmpl(&l.atom);
                        if l.positive {
                            s
                        } else {
                            format!("!{s}")
                        }
                    })
                    .collect::<Vec<_>>(),
            )?;
            fmt_atoms(
                f,
                "eff",
                &a.eff
                    .iter()
                    .map(|l| {
                        let s = tmpl(&l.atom);
                        if l.positive {
                            s
                        } else {
                            format!("!{s}")
                        }
                    })
                    .collect::<Vec<_>>(),
            )?;
            fmt_atoms(f, "cost", &a.cost.iter().map(tmpl).collect::<Vec<_>>())?;
        }
        Ok(())
    }
}

impl Domain {
    /// Parse the output of `Display` back into a domain.
    pub fn parse(text: &str) -> Result<Domain, DomainError> {
        let mut predicates = Vec::new();
        let mut actions: Vec<ActionSchema> = Vec::new();
        let err = |line: usize, msg: &str| DomainError::Parse {
            line,
            msg: msg.to_string(),
        };
        let parse_atom = |line: usize, s: &str| -> Result<AtomTemplate, DomainError> {
            let s = s.trim();
            let open = s.find('(').ok_or_else(|| err(line, "expected `(`"))?;
            if !s.ends_with(')') {
                return Err(err(line, "expected `)`"));
            }
            let pred = s[..open].trim().to_string();
            let inner = &s[open + 1..s.len() - 1];
            let args = if inner.trim().is_empty() {
                vec![]
            } else {
                inner.split(',').map(|a| a.trim().to_string()).collect()
            };
            Ok(AtomTemplate { pred, args })
        };
        // Split a bracketed list on top-level commas.
        let split_list = |line: usize, s: &str| -> Result<Vec<String>, DomainError> {
            let s = s.trim();
            if !s.starts_with('[') || !s.ends_with(']') {
                return Err(err(line, "expected `[...]`"));
            }
            let inner = &s[1..s.len() - 1];
            let mut out = Vec::new();
            let mut depth = 0usize;
            let mut cur = String::new();
            for ch in inner.chars() {
                match ch {
                    '(' => {
                        depth += 1;
                        cur.push(ch);
                    }
                    ')' => {
                        depth -= 1;
                        cur.push(ch);
                    }
                    ',' if depth == 0 => {
                        out.push(cur.trim().to_string());
                        cur.clear();
                    }
                    _ => cur.push(ch),
                }
            }
            if !cur.trim().is_empty() {
                out.push(cur.trim().to_string());
            }
            Ok(out)
        };

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim_end();
            if line.trim().is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("predicate ") {
                let atom = parse_atom(lineno, rest)?;
                let params = atom
                    .args
                    .iter()
                    .map(|t| {
                        ParamType::from_name(t)
                            .ok_or_else(|| err(lineno, &format!("unknown type `{t}`")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                predicates.push(PredicateDecl {
                    name: atom.pred,
                    params,
                });
            } else if let Some(rest) = line.strip_prefix("action ") {
                let atom = parse_atom(lineno, rest)?;
                let params = atom
                    .args
                    .iter()
                    .map(|a| {
                        let (name, ty) = a
                            .split_once(':')
                            .ok_or_else(|| err(lineno, "expected `name: type`"))?;
                        let ty = ty.trim();
                        let (ty, binding) = if let Some(t) = ty.strip_suffix('!') {
                            (t, Binding::Output)
                        } else {
                            (ty, Binding::Input)
                        };
                        Ok(ParamSpec {
                            name: name.trim().to_string(),
                            ptype: ParamType::from_name(ty)
                                .ok_or_else(|| err(lineno, &format!("unknown type `{ty}`")))?,
                            binding,
                        })
                    })
                    .collect::<Result<Vec<_>, DomainError>>()?;
                actions.push(ActionSchema {
                    name: atom.pred,
                    params,
                    con: vec![],
                    pre: vec![],
                    eff: vec![],
                    cost: vec![],
                });
            } else if let Some((label, rest)) = line.trim().split_once(':') {
                let action = actions
                    .last_mut()
                    .ok_or_else(|| err(lineno, "clause before any action"))?;
                let items = split_list(lineno, rest)?;
                match label.trim() {
                    "con" => {
                        for it in items {
                            action.con.push(parse_atom(lineno, &it)?);
                        }
                    }
                    "cost" => {
                        for it in items {
                            action.cost.push(parse_atom(lineno, &it)?);
                        }
                    }
                    lbl @ ("pre" | "eff") => {
                        for it in items {
                            let (positive, body) = match it.strip_prefix('!') {
                                Some(b) => (false, b.to_string()),
                                None => (true, it),
                            };
                            let lit = Literal {
                                positive,
                                atom: parse_atom(lineno, &body)?,
                            };
                            if lbl == "pre" {
                                action.pre.push(lit);
                            } else {
                                action.eff.push(lit);
                            }
                        }
                    }
                    other => return Err(err(lineno, &format!("unknown clause `{other}`"))),
                }
            } else {
                return Err(err(lineno, "unrecognized line"));
            }
        }
        let domain = Domain {
            predicates,
            actions,
        };
        for a in &domain.actions {
            a.validate().map_err(DomainError::Invalid)?;
        }
        Ok(domain)
    }
}

/// Definition of a movable object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectDef {
    pub name: String,
    pub spheres: SphereSet,
    pub initial_pose: Pose2,
    /// Distance from the object origin at which grasps are sampled.
    pub grasp_standoff: f64,
    #[serde(default)]
    pub is_stick: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDef {
    pub name: String,
    pub rect: Box2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ButtonDef {
    pub name: String,
    pub center: (f64, f64),
    pub radius: f64,
}

/// Geometric description of the planning world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub robot: KinematicChain,
    pub initial_conf: Vec<f64>,
    pub objects: Vec<ObjectDef>,
    pub surfaces: Vec<SurfaceDef>,
    pub obstacles: Vec<Box2>,
    pub buttons: Vec<ButtonDef>,
    /// Workspace bounds; the ambient domain of placement and press poses.
    pub bounds: Box2,
}

impl World {
    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.name == name)
    }
    pub fn surface_index(&self, name: &str) -> Option<usize> {
        self.surfaces.iter().position(|s| s.name == name)
    }
    pub fn button_index(&self, name: &str) -> Option<usize> {
        self.buttons.iter().position(|b| b.name == name)
    }
}

/// Goal-state soft cost: minimize the pairwise distance between the named
/// objects' final placements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GoalCostSpec {
    MinimizeObjDist { objects: Vec<String> },
}

/// A complete planning problem: domain, world, initial state, goal.
#[derive(Debug, Clone)]
pub struct TampProblem {
    pub domain: Domain,
    pub world: World,
    pub init: State,
    /// Continuous constants referenced by `ContTerm::Const`. Index 0 is the
    /// initial configuration; the following entries are initial placements.
    pub constants: Vec<(ParamType, Vec<f64>)>,
    pub goal: Vec<GroundAtom>,
    pub goal_cost: Option<GoalCostSpec>,
    /// Synthesized schema for the goal-cost dummy action, when declared.
    pub goal_cost_schema: Option<ActionSchema>,
}

impl TampProblem {
    /// Assemble the initial symbolic state from the world description.
    pub fn from_world(
        world: World,
        goal: Vec<GroundAtom>,
        goal_cost: Option<GoalCostSpec>,
    ) -> TampProblem {
        let domain = builtin_domain();
        let mut constants = vec![(ParamType::Conf, world.initial_conf.clone())];
        let mut init: State = BTreeSet::new();
        init.insert(GroundAtom::new(
            "AtConf",
            vec![GroundArg::Cont(ContTerm::Const(0))],
        ));
        init.insert(GroundAtom::nullary("HandEmpty"));
        for obj in &world.objects {
            let idx = constants.len();
            let pose = obj.initial_pose;
            constants.push((ParamType::Placement, vec![pose.x, pose.y, pose.theta]));
            init.insert(GroundAtom::new(
                "AtPlacement",
                vec![
                    GroundArg::Sym(obj.name.clone()),
                    GroundArg::Cont(ContTerm::Const(idx)),
                ],
            ));
            if obj.is_stick {
                init.insert(GroundAtom::new(
                    "IsStick",
                    vec![GroundArg::Sym(obj.name.clone())],
                ));
            }
        }
        let goal_cost_schema = goal_cost.as_ref().map(|spec| match spec {
            GoalCostSpec::MinimizeObjDist { objects } => min_obj_dist_schema(objects),
        });
        TampProblem {
            domain,
            world,
            init,
            constants,
            goal,
            goal_cost,
            goal_cost_schema,
        }
    }

    pub fn const_values(&self, idx: usize) -> &[f64] {
        &self.constants[idx].1
    }

    pub fn goal_satisfied(&self, state: &State) -> bool {
        self.goal.iter().all(|g| state.contains(g))
    }
}

/// Convenience constructors for goal atoms.
pub fn on_goal(object: &str, surface: &str) -> GroundAtom {
    GroundAtom::new(
        "On",
        vec![
            GroundArg::Sym(object.to_string()),
            GroundArg::Sym(surface.to_string()),
        ],
    )
}

pub fn pressed_goal(button: &str) -> GroundAtom {
    GroundAtom::new("Pressed", vec![GroundArg::Sym(button.to_string())])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pick_action(o: &str, g: u64, p: ContTerm, q: ContTerm) -> GroundAction {
        GroundAction {
            schema: "Pick".into(),
            args: vec![
                GroundArg::Sym(o.to_string()),
                GroundArg::Cont(ContTerm::Var(VarId(g))),
                GroundArg::Cont(p),
                GroundArg::Cont(q),
            ],
        }
    }

    fn ready_state() -> State {
        let mut s = BTreeSet::new();
        s.insert(GroundAtom::nullary("HandEmpty"));
        s.insert(GroundAtom::new(
            "AtConf",
            vec![GroundArg::Cont(ContTerm::Var(VarId(1)))],
        ));
        s.insert(GroundAtom::new(
            "AtPlacement",
            vec![
                GroundArg::Sym("red".into()),
                GroundArg::Cont(ContTerm::Const(1)),
            ],
        ));
        s.insert(GroundAtom::nullary("ReadyToAct"));
        s
    }

    #[test]
    fn pick_applicable_when_hand_empty() {
        let domain = builtin_domain();
        let s = ready_state();
        let a = pick_action("red", 2, ContTerm::Const(1), ContTerm::Var(VarId(1)));
        assert!(applicable(&domain, &s, &a));
    }

    #[test]
    fn pick_inapplicable_when_holding() {
        let domain = builtin_domain();
        let mut s = ready_state();
        s.remove(&GroundAtom::nullary("HandEmpty"));
        s.insert(GroundAtom::new(
            "Holding",
            vec![
                GroundArg::Sym("red".into()),
                GroundArg::Cont(ContTerm::Var(VarId(9))),
            ],
        ));
        let a = pick_action("red", 2, ContTerm::Const(1), ContTerm::Var(VarId(1)));
        assert!(!applicable(&domain, &s, &a));
    }

    #[test]
    fn empty_preconditions_always_applicable() {
        let mut domain = builtin_domain();
        domain.actions.push(ActionSchema {
            name: "Noop".into(),
            params: vec![],
            con: vec![],
            pre: vec![],
            eff: vec![],
            cost: vec![],
        });
        let a = GroundAction {
            schema: "Noop".into(),
            args: vec![],
        };
        assert!(applicable(&domain, &State::new(), &a));
        let s2 = apply(&domain, &State::new(), &a).unwrap();
        assert!(s2.is_empty());
    }

    #[test]
    fn pick_effects() {
        let domain = builtin_domain();
        let s = ready_state();
        let a = pick_action("red", 2, ContTerm::Const(1), ContTerm::Var(VarId(1)));
        let s2 = apply(&domain, &s, &a).unwrap();
        assert!(s2.contains(&GroundAtom::new(
            "Holding",
            vec![
                GroundArg::Sym("red".into()),
                GroundArg::Cont(ContTerm::Var(VarId(2)))
            ],
        )));
        assert!(!s2.contains(&GroundAtom::nullary("HandEmpty")));
        assert!(!s2
            .iter()
            .any(|atom| atom.pred == "AtPlacement"));
        // Reverse the effects by hand: original state restored.
        let mut s3 = s2.clone();
        s3.remove(&GroundAtom::new(
            "Holding",
            vec![
                GroundArg::Sym("red".into()),
                GroundArg::Cont(ContTerm::Var(VarId(2))),
            ],
        ));
        s3.insert(GroundAtom::nullary("HandEmpty"));
        s3.insert(GroundAtom::new(
            "AtPlacement",
            vec![
                GroundArg::Sym("red".into()),
                GroundArg::Cont(ContTerm::Const(1)),
            ],
        ));
        s3.insert(GroundAtom::nullary("ReadyToAct"));
        assert_eq!(s3, s);
    }

    #[test]
    fn apply_rejects_inapplicable() {
        let domain = builtin_domain();
        let mut s = ready_state();
        s.remove(&GroundAtom::nullary("ReadyToAct"));
        let a = pick_action("red", 2, ContTerm::Const(1), ContTerm::Var(VarId(1)));
        assert!(apply(&domain, &s, &a).is_err());
    }

    #[test]
    fn apply_only_produces_declared_predicates() {
        let domain = builtin_domain();
        let s = ready_state();
        let a = pick_action("red", 2, ContTerm::Const(1), ContTerm::Var(VarId(1)));
        let s2 = apply(&domain, &s, &a).unwrap();
        for atom in &s2 {
            assert!(domain.predicate(&atom.pred).is_some(), "undeclared {}", atom.pred);
        }
    }

    #[test]
    fn goal_cost_action_examples() {
        let objs: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let schema = min_obj_dist_schema(&objs);
        assert_eq!(schema.pre.len(), 3);
        assert_eq!(schema.cost.len(), 3);
        assert!(schema.eff.is_empty());

        let two: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        assert_eq!(min_obj_dist_schema(&two).cost.len(), 1);

        // Empty cost list: a pure goal-check dummy action.
        let schema = make_goal_cost_action(
            "GoalCheck",
            vec![AtomTemplate::new("AtPlacement", &["o0", "p0"])],
            vec![
                p("o0", ParamType::Obj, Binding::Input),
                p("p0", ParamType::Placement, Binding::Input),
            ],
            vec![],
        )
        .unwrap();
        assert!(schema.cost.is_empty());
    }

    #[test]
    fn goal_cost_rejects_unbound_parameter() {
        let r = make_goal_cost_action(
            "Bad",
            vec![AtomTemplate::new("AtPlacement", &["o0", "p0"])],
            vec![
                p("o0", ParamType::Obj, Binding::Input),
                p("p0", ParamType::Placement, Binding::Input),
                p("p9", ParamType::Placement, Binding::Input),
            ],
            vec![AtomTemplate::new("Dist", &["p0", "p9"])],
        );
        assert!(r.is_err());
    }

    #[test]
    fn builtin_domain_round_trips() {
        let domain = builtin_domain();
        assert_eq!(domain.predicates.len(), 8);
        assert_eq!(domain.actions.len(), 6);
        let text = domain.to_string();
        let parsed = Domain::parse(&text).unwrap();
        assert_eq!(parsed, domain);
    }

    #[test]
    fn vocabulary_covers_reference_listing() {
        let domain = builtin_domain();
        for pred in [
            "AtConf",
            "HandEmpty",
            "AtPlacement",
            "Holding",
            "On",
            "IsStick",
            "Pressed",
        ] {
            assert!(domain.predicate(pred).is_some());
        }
        let mut constraint_names: Vec<&str> = domain
            .actions
            .iter()
            .flat_map(|a| a.con.iter().map(|c| c.pred.as_str()))
            .collect();
        constraint_names.sort_unstable();
        constraint_names.dedup();
        assert_eq!(
            constraint_names,
            vec![
                "CFreeHold",
                "CFreePlace",
                "CFreeTraj",
                "CFreeTrajHold",
                "Grasp",
                "Kin",
                "Motion",
                "StablePlace",
                "ValidPress",
                "ValidStickPress",
            ]
        );
    }
}
