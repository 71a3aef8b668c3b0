//! Post-event restoration planning for smart networks.
//!
//! After a damage scenario the buses still fed by the substation stay fed.
//! Every other bus can be picked up in two ways: by closing tie switches
//! that reconnect it to the substation-fed region, or by including it in an
//! intentional island energized by a single grid-forming DG whose capacity
//! covers the island load. The planner chooses switch states that maximize
//! restored load (critical load weighted), then raw restored kW, then the
//! fewest switch operations.
//!
//! Only switches with at least one de-energized endpoint can change the
//! outcome, so the search runs over those. With at most
//! [`RestorationParams::exact_switch_limit`] such switches every state
//! combination is scored; above that a greedy single-toggle local search is
//! used. Scoring works on "segments", the connected components of intact
//! lines, so each candidate configuration costs one small union-find pass.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::damage::{energized_after_damage, DamageScenario};
use crate::feeder::{ConfigLabel, EdgeKind, FeederNetwork, SwitchKind};

/// Relative slack used when comparing restored-load totals and capacities.
pub const LOAD_TOLERANCE: f64 = 1e-9;

/// Mean switch operating times, hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwitchingTimes {
    pub manual_h: f64,
    pub remote_h: f64,
}

impl Default for SwitchingTimes {
    fn default() -> Self {
        SwitchingTimes {
            manual_h: 0.5,
            remote_h: 20.0 / 3600.0,
        }
    }
}

impl SwitchingTimes {
    pub fn time_for(&self, kind: SwitchKind) -> f64 {
        match kind {
            SwitchKind::Manual => self.manual_h,
            SwitchKind::Remote => self.remote_h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RestorationParams {
    /// Objective multiplier on critical bus load.
    pub critical_weight: f64,
    /// Largest candidate-switch count searched exhaustively.
    pub exact_switch_limit: usize,
    pub switching: SwitchingTimes,
}

impl Default for RestorationParams {
    fn default() -> Self {
        RestorationParams {
            critical_weight: 10.0,
            exact_switch_limit: 12,
            switching: SwitchingTimes::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchAction {
    pub switch_id: String,
    /// New state: `true` closes the switch.
    pub close: bool,
    pub kind: SwitchKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Island {
    pub dg_id: String,
    pub buses: BTreeSet<String>,
    pub load_kw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RestorationPlan {
    pub switch_actions: Vec<SwitchAction>,
    pub islands: Vec<Island>,
    /// De-energized buses picked up again from the substation through tie switches.
    pub reconnected: BTreeSet<String>,
    pub restored_kw: f64,
    pub switching_time_h: f64,
    /// Whether the plan came from exhaustive search.
    pub exact: bool,
}

impl RestorationPlan {
    pub fn empty() -> Self {
        RestorationPlan {
            exact: true,
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.switch_actions.is_empty() && self.islands.is_empty() && self.reconnected.is_empty()
    }

    pub fn restored_buses(&self) -> BTreeSet<String> {
        let mut all = self.reconnected.clone();
        for island in &self.islands {
            all.extend(island.buses.iter().cloned());
        }
        all
    }
}

/// Sequential switching time: the sum of each operated switch's time.
pub fn switching_time(plan: &RestorationPlan, times: &SwitchingTimes) -> f64 {
    plan.switch_actions.iter().map(|a| times.time_for(a.kind)).sum()
}

/// Lexicographic plan quality: weighted load, raw load, fewer actions.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Score {
    pub weighted: f64,
    pub raw: f64,
    pub actions: usize,
}

fn approx_cmp(a: f64, b: f64) -> std::cmp::Ordering {
    let scale = a.abs().max(b.abs()).max(1.0);
    if (a - b).abs() <= LOAD_TOLERANCE * scale {
        std::cmp::Ordering::Equal
    } else if a < b {
        std::cmp::Ordering::Less
    } else {
        std::cmp::Ordering::Greater
    }
}

impl Score {
    pub fn better_than(&self, other: &Score) -> bool {
        use std::cmp::Ordering::*;
        match approx_cmp(self.weighted, other.weighted) {
            Greater => true,
            Less => false,
            Equal => match approx_cmp(self.raw, other.raw) {
                Greater => true,
                Less => false,
                Equal => self.actions < other.actions,
            },
        }
    }
}

pub(crate) fn fits(load: f64, capacity: f64) -> bool {
    load <= capacity + LOAD_TOLERANCE * capacity.max(1.0)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so results do not depend on union order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// A group of de-energized buses joined by intact lines. Node 0 stands for
/// everything already fed from the substation.
#[derive(Debug, Clone, Default)]
struct Node {
    load: f64,
    weighted: f64,
    /// Grid-forming DGs (ordinal, capacity) located in the node.
    dgs: Vec<(usize, f64)>,
}

const GRID: usize = 0;

struct Candidate {
    switch: usize,
    a: usize,
    b: usize,
    normally_closed: bool,
}

struct SearchSpace {
    nodes: Vec<Node>,
    bus_node: Vec<usize>,
    candidates: Vec<Candidate>,
    /// Nodes touched by at least one candidate (never includes GRID).
    touched: Vec<usize>,
    /// Score contribution of untouched de-energized nodes.
    fixed: (f64, f64),
}

fn build_space(
    net: &FeederNetwork,
    scenario: &DamageScenario,
    energized: &[bool],
    params: &RestorationParams,
) -> SearchSpace {
    let n_bus = net.buses().len();
    let mut uf = UnionFind::new(n_bus);
    for (i, failed) in scenario.line_failed.iter().enumerate() {
        if !failed {
            let (a, b) = net.line_ends(i);
            uf.union(a, b);
        }
    }

    let mut root_node: BTreeMap<usize, usize> = BTreeMap::new();
    let mut nodes = vec![Node::default()];
    let mut bus_node = vec![GRID; n_bus];
    for bus in 0..n_bus {
        if energized[bus] {
            continue;
        }
        let root = uf.find(bus);
        let node = *root_node.entry(root).or_insert_with(|| {
            nodes.push(Node::default());
            nodes.len() - 1
        });
        bus_node[bus] = node;
        let b = &net.buses()[bus];
        nodes[node].load += b.load_kw;
        nodes[node].weighted += if b.is_critical {
            b.load_kw * params.critical_weight
        } else {
            b.load_kw
        };
    }
    for (k, dg) in net.dgs().iter().enumerate() {
        let bus = net.dg_bus(k);
        if dg.grid_forming && !energized[bus] {
            nodes[bus_node[bus]].dgs.push((k, dg.capacity_kw));
        }
    }

    let mut candidates = Vec::new();
    let mut is_touched = vec![false; nodes.len()];
    for (s, sw) in net.switches().iter().enumerate() {
        let (a, b) = net.switch_ends(s);
        if energized[a] && energized[b] {
            continue;
        }
        let (na, nb) = (bus_node[a], bus_node[b]);
        if na == nb {
            continue;
        }
        is_touched[na] = true;
        is_touched[nb] = true;
        candidates.push(Candidate {
            switch: s,
            a: na,
            b: nb,
            normally_closed: !sw.normally_open,
        });
    }
    is_touched[GRID] = false;
    let touched: Vec<usize> = (1..nodes.len()).filter(|&n| is_touched[n]).collect();

    let mut fixed = (0.0, 0.0);
    for (i, node) in nodes.iter().enumerate().skip(1) {
        if !is_touched[i] && island_ok(&node.dgs, node.load) {
            fixed.0 += node.weighted;
            fixed.1 += node.load;
        }
    }

    SearchSpace {
        nodes,
        bus_node,
        candidates,
        touched,
        fixed,
    }
}

fn island_ok(dgs: &[(usize, f64)], load: f64) -> bool {
    dgs.len() == 1 && fits(load, dgs[0].1)
}

/// Group index per node (GRID maps to its own root) for one set of
/// candidate switch states, plus whether each root is restored.
struct Evaluation {
    score: Score,
    root_of: Vec<usize>,
    restored_root: Vec<bool>,
}

fn evaluate(space: &SearchSpace, closed: &[bool]) -> Evaluation {
    let n = space.nodes.len();
    let mut uf = UnionFind::new(n);
    let mut actions = 0;
    for (cand, &state) in space.candidates.iter().zip(closed) {
        if state {
            uf.union(cand.a, cand.b);
        }
        if state != cand.normally_closed {
            actions += 1;
        }
    }

    let mut load = vec![0.0; n];
    let mut weighted = vec![0.0; n];
    let mut dgs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut root_of = vec![0; n];
    root_of[GRID] = uf.find(GRID);
    for &node in &space.touched {
        let r = uf.find(node);
        root_of[node] = r;
        load[r] += space.nodes[node].load;
        weighted[r] += space.nodes[node].weighted;
        dgs[r].extend_from_slice(&space.nodes[node].dgs);
    }

    let grid_root = root_of[GRID];
    let mut restored_root = vec![false; n];
    let (mut w_total, mut raw_total) = space.fixed;
    for r in 0..n {
        if uf.parent[r] != r || (r != grid_root && load[r] == 0.0 && dgs[r].is_empty()) {
            continue;
        }
        let ok = r == grid_root || island_ok(&dgs[r], load[r]);
        if ok {
            restored_root[r] = true;
            w_total += weighted[r];
            raw_total += load[r];
        }
    }
    Evaluation {
        score: Score {
            weighted: w_total,
            raw: raw_total,
            actions,
        },
        root_of,
        restored_root,
    }
}

fn exhaustive(space: &SearchSpace) -> Vec<bool> {
    let c = space.candidates.len();
    let mut best_states: Vec<bool> = space.candidates.iter().map(|k| k.normally_closed).collect();
    let mut best = evaluate(space, &best_states).score;
    let mut states = vec![false; c];
    for mask in 0u64..(1u64 << c) {
        for (i, s) in states.iter_mut().enumerate() {
            *s = mask >> i & 1 == 1;
        }
        let score = evaluate(space, &states).score;
        if score.better_than(&best) {
            best = score;
            best_states.copy_from_slice(&states);
        }
    }
    best_states
}

fn greedy(space: &SearchSpace) -> Vec<bool> {
    let mut states: Vec<bool> = space.candidates.iter().map(|k| k.normally_closed).collect();
    let mut current = evaluate(space, &states).score;
    loop {
        let mut best_move: Option<(usize, Score)> = None;
        for i in 0..states.len() {
            states[i] = !states[i];
            let score = evaluate(space, &states).score;
            states[i] = !states[i];
            let beats_best = best_move.as_ref().is_none_or(|(_, b)| score.better_than(b));
            if score.better_than(&current) && beats_best {
                best_move = Some((i, score));
            }
        }
        match best_move {
            Some((i, score)) => {
                states[i] = !states[i];
                current = score;
            }
            None => return states,
        }
    }
}

/// Plans restoration for a damage scenario. Non-smart networks get the
/// empty plan.
pub fn plan_restoration(net: &FeederNetwork, scenario: &DamageScenario, params: &RestorationParams) -> RestorationPlan {
    if net.label() != ConfigLabel::Smart {
        return RestorationPlan::empty();
    }
    let energized = energized_after_damage(net, scenario);
    if energized.iter().all(|e| *e) {
        return RestorationPlan::empty();
    }
    let space = build_space(net, scenario, &energized, params);
    let exact = space.candidates.len() <= params.exact_switch_limit;
    let states = if exact { exhaustive(&space) } else { greedy(&space) };
    let eval = evaluate(&space, &states);

    let switch_actions: Vec<SwitchAction> = space
        .candidates
        .iter()
        .zip(&states)
        .filter(|(c, s)| **s != c.normally_closed)
        .map(|(c, s)| {
            let sw = &net.switches()[c.switch];
            SwitchAction {
                switch_id: sw.id.clone(),
                close: *s,
                kind: sw.kind,
            }
        })
        .collect();

    let grid_root = eval.root_of[GRID];
    let touched: BTreeSet<usize> = space.touched.iter().copied().collect();
    let mut reconnected = BTreeSet::new();
    let mut island_buses: BTreeMap<usize, (BTreeSet<String>, f64)> = BTreeMap::new();
    let mut restored_kw = 0.0;
    for (bus, b) in net.buses().iter().enumerate() {
        if energized[bus] {
            continue;
        }
        let node = space.bus_node[bus];
        let (root, dgs) = if touched.contains(&node) {
            let root = eval.root_of[node];
            if !eval.restored_root[root] {
                continue;
            }
            (Some(root), None)
        } else {
            let n = &space.nodes[node];
            if !island_ok(&n.dgs, n.load) {
                continue;
            }
            (None, Some(n.dgs[0].0))
        };
        restored_kw += b.load_kw;
        if root == Some(grid_root) {
            reconnected.insert(b.id.clone());
            continue;
        }
        let dg = dgs.unwrap_or_else(|| island_dg(&space, &eval, root.expect("touched root")));
        let entry = island_buses.entry(dg).or_default();
        entry.0.insert(b.id.clone());
        entry.1 += b.load_kw;
    }

    let islands = island_buses
        .into_iter()
        .map(|(dg, (buses, load_kw))| Island {
            dg_id: net.dgs()[dg].id.clone(),
            buses,
            load_kw,
        })
        .collect();

    let mut plan = RestorationPlan {
        switch_actions,
        islands,
        reconnected,
        restored_kw,
        switching_time_h: 0.0,
        exact,
    };
    plan.switching_time_h = switching_time(&plan, &params.switching);
    plan
}

fn island_dg(space: &SearchSpace, eval: &Evaluation, root: usize) -> usize {
    space
        .touched
        .iter()
        .filter(|&&n| eval.root_of[n] == root)
        .flat_map(|&n| space.nodes[n].dgs.iter())
        .map(|(k, _)| *k)
        .next()
        .expect("restored island has a DG")
}

/// Re-checks a plan against the network by direct graph search: switch
/// actions apply to existing switches and change their state, every bus fed
/// before restoration is still fed, reconnected buses are exactly the newly
/// substation-fed buses, and each island is a full connected component with
/// one grid-forming DG whose capacity covers its load.
pub fn verify_plan(
    net: &FeederNetwork,
    scenario: &DamageScenario,
    plan: &RestorationPlan,
    times: &SwitchingTimes,
) -> Result<(), String> {
    let lines_up = scenario.lines_up();
    let normal = net.normal_switch_states();
    let mut states = normal.clone();
    for action in &plan.switch_actions {
        let s = net
            .switches()
            .iter()
            .position(|sw| sw.id == action.switch_id)
            .ok_or_else(|| format!("unknown switch {}", action.switch_id))?;
        if normal[s] == action.close {
            return Err(format!("action on {} does not change its state", action.switch_id));
        }
        states[s] = action.close;
    }

    let before = net.energized_mask(&lines_up, &normal);
    let after = net.energized_mask(&lines_up, &states);
    for (i, b) in net.buses().iter().enumerate() {
        if before[i] && !after[i] {
            return Err(format!("bus {} loses substation supply", b.id));
        }
        let newly = after[i] && !before[i];
        if newly != plan.reconnected.contains(&b.id) {
            return Err(format!("reconnected set disagrees at bus {}", b.id));
        }
    }

    let mut seen = BTreeSet::new();
    for island in &plan.islands {
        let dg = net
            .dgs()
            .iter()
            .position(|d| d.id == island.dg_id)
            .ok_or_else(|| format!("unknown DG {}", island.dg_id))?;
        let start = net.dg_bus(dg);
        let comp = component(net, start, &lines_up, &states);
        let ids: BTreeSet<String> = comp.iter().map(|&i| net.buses()[i].id.clone()).collect();
        if ids != island.buses {
            return Err(format!("island of {} is not a full component", island.dg_id));
        }
        if comp.iter().any(|&i| after[i]) {
            return Err(format!("island of {} touches the substation region", island.dg_id));
        }
        let forming: Vec<usize> = net
            .dgs()
            .iter()
            .enumerate()
            .filter(|(k, d)| d.grid_forming && comp.contains(&net.dg_bus(*k)))
            .map(|(k, _)| k)
            .collect();
        if forming != vec![dg] {
            return Err(format!(
                "island of {} has {} grid-forming DGs",
                island.dg_id,
                forming.len()
            ));
        }
        let load: f64 = comp.iter().map(|&i| net.buses()[i].load_kw).sum();
        if !fits(load, net.dgs()[dg].capacity_kw) {
            return Err(format!("island of {} exceeds capacity", island.dg_id));
        }
        if approx_cmp(load, island.load_kw) != std::cmp::Ordering::Equal {
            return Err(format!("island of {} reports wrong load", island.dg_id));
        }
        for id in ids {
            if !seen.insert(id.clone()) {
                return Err(format!("bus {id} appears in two islands"));
            }
        }
    }

    let restored: f64 = net
        .buses()
        .iter()
        .filter(|b| plan.reconnected.contains(&b.id) || seen.contains(&b.id))
        .map(|b| b.load_kw)
        .sum();
    if approx_cmp(restored, plan.restored_kw) != std::cmp::Ordering::Equal {
        return Err(format!("restored_kw {} but buses sum to {restored}", plan.restored_kw));
    }
    let t = switching_time(plan, times);
    if approx_cmp(t, plan.switching_time_h) != std::cmp::Ordering::Equal {
        return Err("switching time mismatch".into());
    }
    Ok(())
}

fn component(net: &FeederNetwork, start: usize, lines_up: &[bool], closed: &[bool]) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(start);
    queue.push_back(start);
    while let Some(bus) = queue.pop_front() {
        for edge in &net.adjacency()[bus] {
            let open = match edge.kind {
                EdgeKind::Line(i) => lines_up[i],
                EdgeKind::Switch(i) => closed[i],
            };
            if open && seen.insert(edge.to) {
                queue.push_back(edge.to);
            }
        }
    }
    seen
}
