//! Forward best-first task search that enumerates candidate plan skeletons
//! on demand. Discrete parameters are ground against the scenario
//! declarations; every continuous slot receives a globally fresh variable.
//! Goal-reaching sequences are yielded lazily in nondecreasing priority,
//! where the priority is plan length plus an admissible goal-distance
//! estimate, so returned skeletons come shortest-first.

use crate::domain::{
    applicable, apply, instantiate_atom, ActionSchema, Binding, ContTerm, GoalCostSpec,
    GroundAction, GroundArg, GroundAtom, ParamType, State, TampProblem, VarId,
};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// A continuous variable owned by a plan skeleton.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonVar {
    pub id: VarId,
    pub ptype: ParamType,
}

/// An ordered sequence of ground actions whose continuous parameters are
/// free variables shared across actions. Symbolic execution from the
/// initial state reaches the goal; the goal-cost dummy action, if any,
/// is last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSkeleton {
    pub actions: Vec<GroundAction>,
    pub vars: Vec<SkeletonVar>,
    /// Search provenance, unique per returned skeleton.
    pub node_id: u64,
}

impl PlanSkeleton {
    /// Number of domain actions, excluding the goal-cost dummy action.
    pub fn domain_len(&self) -> usize {
        self.actions
            .iter()
            .filter(|a| a.schema != "MinimizeObjDist")
            .count()
    }

    pub fn describe(&self) -> String {
        self.actions
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DepthBound {
    Unbounded,
    /// Bound at `multiplier` times the length of the first solution found.
    Auto { multiplier: u32, fallback: u32 },
    Fixed(u32),
}

impl Default for DepthBound {
    fn default() -> Self {
        DepthBound::Auto {
            multiplier: 3,
            fallback: 30,
        }
    }
}

struct Node {
    state: State,
    plan: Vec<GroundAction>,
    f: u32,
    order: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.order == other.order
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Min-heap on (f, insertion order) through Reverse at the call site.
        (self.f, self.order).cmp(&(other.f, other.order))
    }
}

/// Lazy generator of plan skeletons. Single consumer; not safe for
/// concurrent `next_skeleton` calls.
pub struct SkeletonGenerator {
    problem: TampProblem,
    frontier: BinaryHeap<Reverse<Node>>,
    next_var: u64,
    next_order: u64,
    next_node_id: u64,
    depth_bound: DepthBound,
    first_solution_len: Option<u32>,
    returned: u64,
}

impl SkeletonGenerator {
    pub fn new(problem: &TampProblem, depth_bound: DepthBound) -> Self {
        let mut frontier = BinaryHeap::new();
        let h = goal_distance(problem, &problem.init);
        frontier.push(Reverse(Node {
            state: problem.init.clone(),
            plan: vec![],
            f: h,
            order: 0,
        }));
        SkeletonGenerator {
            problem: problem.clone(),
            frontier,
            next_var: 1,
            next_order: 1,
            next_node_id: 1,
            depth_bound,
            first_solution_len: None,
            returned: 0,
        }
    }

    pub fn skeletons_returned(&self) -> u64 {
        self.returned
    }

    fn fresh_var(&mut self) -> VarId {
        let id = VarId(self.next_var);
        self.next_var += 1;
        id
    }

    fn current_bound(&self) -> Option<u32> {
        match self.depth_bound {
            DepthBound::Unbounded => None,
            DepthBound::Fixed(n) => Some(n),
            DepthBound::Auto {
                multiplier,
                fallback,
            } => Some(match self.first_solution_len {
                Some(l) => l.saturating_mul(multiplier).max(fallback.min(l * multiplier)),
                None => fallback,
            }),
        }
    }

    /// Return the next goal-reaching skeleton, or `None` when the bounded
    /// search space is exhausted.
    pub fn next_skeleton(&mut self) -> Option<PlanSkeleton> {
        loop {
            let Reverse(node) = self.frontier.pop()?;
            let depth = node.plan.len() as u32;
            if let Some(bound) = self.current_bound() {
                if depth > bound {
                    continue;
                }
            }
            let is_goal = self.problem.goal_satisfied(&node.state);
            if is_goal {
                if self.first_solution_len.is_none() {
                    self.first_solution_len = Some(depth.max(1));
                }
                let skeleton = self.finish_skeleton(&node);
                // Goal states may still be expanded: longer plans through
                // them are legal skeletons too.
                if self.current_bound().map_or(true, |b| depth < b) {
                    self.expand(node);
                }
                self.returned += 1;
                return Some(skeleton);
            }
            if self.current_bound().map_or(true, |b| depth < b) {
                self.expand(node);
            }
        }
    }

    fn expand(&mut self, node: Node) {
        let schemas: Vec<ActionSchema> = self.problem.domain.actions.clone();
        for schema in &schemas {
            let groundings = self.ground_schema(schema, &node.state);
            for action in groundings {
                if !applicable(&self.problem.domain, &node.state, &action) {
                    continue;
                }
                let next_state = apply(&self.problem.domain, &node.state, &action)
                    .expect("applicability checked");
                let mut plan = node.plan.clone();
                plan.push(action);
                let g = plan.len() as u32;
                let h = goal_distance(&self.problem, &next_state);
                let order = self.next_order;
                self.next_order += 1;
                self.frontier.push(Reverse(Node {
                    state: next_state,
                    plan,
                    f: g + h,
                    order,
                }));
            }
        }
    }

    /// Enumerate ground instances of a schema in the given state: discrete
    /// parameters iterate the scenario declarations in declaration order,
    /// continuous inputs unify with the unique matching state atom, and
    /// continuous outputs become fresh variables.
    fn ground_schema(&mut self, schema: &ActionSchema, state: &State) -> Vec<GroundAction> {
        // Discrete choices, in declaration order.
        let mut combos: Vec<Vec<(usize, GroundArg)>> = vec![vec![]];
        for (pi, spec) in schema.params.iter().enumerate() {
            if spec.ptype.is_continuous() {
                continue;
            }
            let names: Vec<String> = match spec.ptype {
                ParamType::Obj => self.problem.world.objects.iter().map(|o| o.name.clone()).collect(),
                ParamType::Surface => self
                    .problem
                    .world
                    .surfaces
                    .iter()
                    .map(|s| s.name.clone())
                    .collect(),
                ParamType::Button => self
                    .problem
                    .world
                    .buttons
                    .iter()
                    .map(|b| b.name.clone())
                    .collect(),
                _ => unreachable!(),
            };
            let mut next = Vec::new();
            for combo in &combos {
                for name in &names {
                    let mut c = combo.clone();
                    c.push((pi, GroundArg::Sym(name.clone())));
                    next.push(c);
                }
            }
            combos = next;
        }

        let mut out = Vec::new();
        for combo in combos {
            let mut bindings: Vec<Option<GroundArg>> = vec![None; schema.params.len()];
            for (pi, arg) in &combo {
                bindings[*pi] = Some(arg.clone());
            }
            if !self.unify_inputs(schema, state, &mut bindings) {
                continue;
            }
            // Fresh variables for continuous outputs.
            for (pi, spec) in schema.params.iter().enumerate() {
                if bindings[pi].is_none() {
                    assert!(
                        spec.ptype.is_continuous() && spec.binding == Binding::Output,
                        "unbound input parameter {} of {}",
                        spec.name,
                        schema.name
                    );
                    bindings[pi] = Some(GroundArg::Cont(ContTerm::Var(self.fresh_var())));
                }
            }
            out.push(GroundAction {
                schema: schema.name.clone(),
                args: bindings.into_iter().map(Option::unwrap).collect(),
            });
        }
        out
    }

    /// Bind continuous input parameters by matching the positive
    /// preconditions against the state. Our predicates bind each input
    /// uniquely given the discrete arguments, so the first match in sorted
    /// state order suffices.
    fn unify_inputs(
        &self,
        schema: &ActionSchema,
        state: &State,
        bindings: &mut Vec<Option<GroundArg>>,
    ) -> bool {
        for lit in schema.pre.iter().filter(|l| l.positive) {
            let param_idx: Vec<usize> = lit
                .atom
                .args
                .iter()
                .map(|a| schema.param_index(a).expect("validated schema"))
                .collect();
            if param_idx.iter().all(|&pi| bindings[pi].is_some()) {
                continue;
            }
            let mut matched = false;
            for atom in state.iter() {
                if atom.pred != lit.atom.pred || atom.args.len() != param_idx.len() {
                    continue;
                }
                let ok = param_idx
                    .iter()
                    .zip(&atom.args)
                    .all(|(&pi, sa)| match &bindings[pi] {
                        Some(b) => b == sa,
                        None => true,
                    });
                if ok {
                    for (&pi, sa) in param_idx.iter().zip(&atom.args) {
                        if bindings[pi].is_none() {
                            bindings[pi] = Some(sa.clone());
                        }
                    }
                    matched = true;
                    break;
                }
            }
            if !matched {
                return false;
            }
        }
        true
    }

    fn finish_skeleton(&mut self, node: &Node) -> PlanSkeleton {
        let mut actions = node.plan.clone();
        // Append the goal-cost dummy action, binding the current placement
        // of every object it scores.
        if let Some(GoalCostSpec::MinimizeObjDist { objects }) = &self.problem.goal_cost {
            let mut args = Vec::new();
            let mut ok = true;
            for name in objects {
                let placement = node.state.iter().find_map(|a| {
                    if a.pred == "AtPlacement" && a.args[0] == GroundArg::Sym(name.clone()) {
                        Some(a.args[1].clone())
                    } else {
                        None
                    }
                });
                match placement {
                    Some(p) => {
                        args.push(GroundArg::Sym(name.clone()));
                        args.push(p);
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                actions.push(GroundAction {
                    schema: "MinimizeObjDist".into(),
                    args,
                });
            }
        }
        let vars = collect_vars(&self.problem, &actions);
        let node_id = self.next_node_id;
        self.next_node_id += 1;
        PlanSkeleton {
            actions,
            vars,
            node_id,
        }
    }
}

/// Collect the continuous variables of an action sequence in order of
/// first appearance, with their semantic types.
pub fn collect_vars(problem: &TampProblem, actions: &[GroundAction]) -> Vec<SkeletonVar> {
    let mut vars: Vec<SkeletonVar> = Vec::new();
    for action in actions {
        let schema = problem.schema_for(&action.schema);
        for (spec, arg) in schema.params.iter().zip(&action.args) {
            if let GroundArg::Cont(ContTerm::Var(id)) = arg {
                if !vars.iter().any(|v| v.id == *id) {
                    vars.push(SkeletonVar {
                        id: *id,
                        ptype: spec.ptype,
                    });
                }
            }
        }
    }
    vars
}

/// Admissible estimate of the number of actions still needed: for every
/// unsatisfied `On` goal, at least pick, move, and place (one action if
/// the object is already held); for every unsatisfied `Pressed` goal, at
/// least one press. The per-goal counts touch disjoint actions, so the
/// sum stays admissible.
fn goal_distance(problem: &TampProblem, state: &State) -> u32 {
    let mut h = 0;
    for goal in &problem.goal {
        if state.contains(goal) {
            continue;
        }
        match goal.pred.as_str() {
            "On" => {
                let held = state
                    .iter()
                    .any(|a| a.pred == "Holding" && a.args[0] == goal.args[0]);
                h += if held { 1 } else { 3 };
            }
            "Pressed" => h += 1,
            _ => h += 1,
        }
    }
    h
}

/// Replay a skeleton's actions from the initial state; `Some(final_state)`
/// iff every action is applicable in sequence and the goal is reached.
pub fn symbolic_execution(problem: &TampProblem, skeleton: &PlanSkeleton) -> Option<State> {
    let mut state = problem.init.clone();
    for action in &skeleton.actions {
        let schema = problem.schema_for(&action.schema).clone();
        let ok = schema
            .pre
            .iter()
            .all(|lit| state.contains(&instantiate_atom(&schema, action, &lit.atom)) == lit.positive);
        if !ok {
            return None;
        }
        for lit in schema.eff.iter().filter(|l| !l.positive) {
            state.remove(&instantiate_atom(&schema, action, &lit.atom));
        }
        for lit in schema.eff.iter().filter(|l| l.positive) {
            state.insert(instantiate_atom(&schema, action, &lit.atom));
        }
    }
    if problem.goal.iter().all(|g| state.contains(g)) {
        Some(state)
    } else {
        None
    }
}

/// Canonical shape of an action sequence: schema names, discrete
/// arguments, and continuous variables renamed by first appearance.
/// Two skeletons with the same shape differ only in variable identity.
pub fn canonical_shape(actions: &[GroundAction]) -> String {
    let mut renames: Vec<VarId> = Vec::new();
    let mut out = String::new();
    for action in actions {
        out.push_str(&action.schema);
        out.push('(');
        for (i, arg) in action.args.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            match arg {
                GroundArg::Sym(s) => out.push_str(s),
                GroundArg::Cont(ContTerm::Const(c)) => out.push_str(&format!("k{c}")),
                GroundArg::Cont(ContTerm::Var(v)) => {
                    let idx = match renames.iter().position(|r| r == v) {
                        Some(i) => i,
                        None => {
                            renames.push(*v);
                            renames.len() - 1
                        }
                    };
                    out.push_str(&format!("v{idx}"));
                }
            }
        }
        out.push(')');
        out.push(';');
    }
    out
}

pub use crate::domain::GroundAtom as Goal;

impl TampProblem {
    /// Schema lookup covering the builtin domain plus the synthesized
    /// goal-cost dummy action.
    pub fn schema_for(&self, name: &str) -> &ActionSchema {
        if name == "MinimizeObjDist" {
            self.goal_cost_schema
                .as_ref()
                .expect("goal-cost schema requested but no goal cost declared")
        } else {
            self.domain.schema(name).expect("unknown schema")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{on_goal, TampProblem};
    use crate::scenario;
    use std::collections::BTreeSet;

    fn simple_problem() -> TampProblem {
        scenario::builtin_scenario("pack1", 0).unwrap().problem
    }

    #[test]
    fn first_skeleton_is_move_pick_move_place() {
        let problem = simple_problem();
        let mut gen = SkeletonGenerator::new(&problem, DepthBound::default());
        let sk = gen.next_skeleton().expect("a skeleton exists");
        let names: Vec<&str> = sk.actions.iter().map(|a| a.schema.as_str()).collect();
        assert_eq!(names, vec!["MoveFree", "Pick", "MoveHold", "Place"]);
        assert!(symbolic_execution(&problem, &sk).is_some());
    }

    #[test]
    fn goal_already_satisfied_yields_empty_skeleton() {
        let mut problem = simple_problem();
        problem.goal = vec![];
        let mut gen = SkeletonGenerator::new(&problem, DepthBound::default());
        let sk = gen.next_skeleton().unwrap();
        assert!(sk.actions.is_empty());
    }

    #[test]
    fn skeletons_are_unique_and_vars_fresh() {
        let problem = simple_problem();
        let mut gen = SkeletonGenerator::new(&problem, DepthBound::Fixed(6));
        let mut seen = BTreeSet::new();
        let mut all_vars = BTreeSet::new();
        while let Some(sk) = gen.next_skeleton() {
            let shape = canonical_shape(&sk.actions);
            // Same shape may recur with different vars only if plans differ;
            // full serialized form must be unique.
            let full = format!("{shape}#{:?}", sk.vars.iter().map(|v| v.id.0).collect::<Vec<_>>());
            assert!(seen.insert(full), "skeleton returned twice");
            for v in &sk.vars {
                assert!(all_vars.insert(v.id.0), "variable id reused across skeletons");
            }
            if seen.len() > 200 {
                break;
            }
        }
        assert!(!seen.is_empty());
    }

    #[test]
    fn returned_lengths_nondecreasing() {
        let problem = simple_problem();
        let mut gen = SkeletonGenerator::new(&problem, DepthBound::Fixed(6));
        let mut last = 0;
        let mut count = 0;
        while let Some(sk) = gen.next_skeleton() {
            assert!(sk.domain_len() >= last);
            last = sk.domain_len();
            count += 1;
            if count > 100 {
                break;
            }
        }
        assert!(count > 1);
    }

    /// Brute-force enumeration of goal-reaching action sequences up to a
    /// depth bound, sharing only the domain apply/ground machinery.
    fn brute_force_shapes(problem: &TampProblem, depth: u32) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut gen = SkeletonGenerator::new(problem, DepthBound::Unbounded);
        // Breadth-first over raw sequences, using the generator only for
        // grounding (fresh ids do not affect shapes).
        let mut layer: Vec<(State, Vec<GroundAction>)> = vec![(problem.init.clone(), vec![])];
        for _ in 0..=depth {
            let mut next = Vec::new();
            for (state, plan) in &layer {
                if problem.goal_satisfied(state) {
                    out.insert(canonical_shape(plan));
                }
                if plan.len() as u32 == depth {
                    continue;
                }
                let schemas = problem.domain.actions.clone();
                for schema in &schemas {
                    for action in gen.ground_schema(schema, state) {
                        if !applicable(&problem.domain, state, &action) {
                            continue;
                        }
                        let s2 = apply(&problem.domain, state, &action).unwrap();
                        let mut p2 = plan.clone();
                        p2.push(action);
                        next.push((s2, p2));
                    }
                }
            }
            layer.extend(next.drain(..));
            layer.retain(|(_, p)| (p.len() as u32) <= depth);
            // Keep only the deepest layer plus goal checks done above; to
            // stay simple, recompute goals for all each round.
            let mut dedup = Vec::new();
            let mut seen = BTreeSet::new();
            for (s, p) in layer.drain(..) {
                let key = canonical_shape(&p);
                if seen.insert(key) {
                    dedup.push((s, p));
                }
            }
            layer = dedup;
        }
        for (state, plan) in &layer {
            if problem.goal_satisfied(state) {
                out.insert(canonical_shape(plan));
            }
        }
        out
    }

    #[test]
    fn completeness_matches_brute_force_at_small_depth() {
        let problem = simple_problem();
        let depth = 5;
        let expected = brute_force_shapes(&problem, depth);
        let mut gen = SkeletonGenerator::new(&problem, DepthBound::Fixed(depth));
        let mut got = BTreeSet::new();
        while let Some(sk) = gen.next_skeleton() {
            got.insert(canonical_shape(&sk.actions));
        }
        assert_eq!(got, expected);
        assert!(!expected.is_empty());
    }

    #[test]
    fn obstructed_goal_requires_relocation_when_short_plans_excluded() {
        let problem = scenario::builtin_scenario("obstructed-stack2d", 0)
            .unwrap()
            .problem;
        // Exclude every skeleton of four or fewer domain actions; the next
        // returned skeleton must relocate an obstructor first.
        let mut gen = SkeletonGenerator::new(&problem, DepthBound::Fixed(8));
        let sk = loop {
            let sk = gen.next_skeleton().expect("relocation skeleton exists");
            if sk.domain_len() > 4 {
                break sk;
            }
        };
        assert!(sk.domain_len() >= 8, "got {}", sk.describe());
        let picks: Vec<&str> = sk
            .actions
            .iter()
            .filter(|a| a.schema == "Pick")
            .map(|a| match &a.args[0] {
                GroundArg::Sym(s) => s.as_str(),
                _ => unreachable!(),
            })
            .collect();
        assert!(picks.iter().any(|o| *o != "red"), "must move an obstructor");
        assert!(symbolic_execution(&problem, &sk).is_some());
    }

    #[test]
    fn goal_distance_is_zero_at_goal() {
        let problem = simple_problem();
        let mut gen = SkeletonGenerator::new(&problem, DepthBound::default());
        let sk = gen.next_skeleton().unwrap();
        let final_state = symbolic_execution(&problem, &sk).unwrap();
        assert_eq!(goal_distance(&problem, &final_state), 0);
        let _ = on_goal("red", "goal");
    }
}
