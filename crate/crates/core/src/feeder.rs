//! Distribution feeder model: buses, lines, switches, distributed generators.
//!
//! A feeder is read from a TOML document with top-level keys `label`,
//! `buses`, `lines`, `switches`, `dgs` and two optional keys: `curves`
//! (named fragility curves referenced by `lines[].fragility`) and
//! `hardening_shift` (m/s added to both thresholds of hardened lines). A
//! loaded [`FeederNetwork`] has been validated and carries a precomputed
//! adjacency structure; it is immutable and can be shared across threads.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fragility::{FragilityCurve, DEFAULT_HARDENING_SHIFT};

/// Which planning configuration a network represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConfigLabel {
    #[default]
    Base,
    Smart,
    Robust,
}

impl ConfigLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ConfigLabel::Base => "base",
            ConfigLabel::Smart => "smart",
            ConfigLabel::Robust => "robust",
        }
    }
}

impl std::fmt::Display for ConfigLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ConfigLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "base" => Ok(ConfigLabel::Base),
            "smart" => Ok(ConfigLabel::Smart),
            "robust" => Ok(ConfigLabel::Robust),
            other => Err(Error::config("label", format!("unknown configuration `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    #[serde(default)]
    pub load_kw: f64,
    #[serde(default)]
    pub is_critical: bool,
    #[serde(default)]
    pub is_substation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    /// Key into the network's `curves` table.
    pub fragility: String,
    #[serde(default)]
    pub hardened: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwitchKind {
    Manual,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Switch {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    pub kind: SwitchKind,
    #[serde(default)]
    pub normally_open: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedGenerator {
    pub id: String,
    pub bus: String,
    pub capacity_kw: f64,
    #[serde(default = "default_true")]
    pub grid_forming: bool,
}

fn default_true() -> bool {
    true
}

fn default_shift() -> f64 {
    DEFAULT_HARDENING_SHIFT
}

/// On-disk shape of a feeder file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeederDocument {
    #[serde(default)]
    pub label: ConfigLabel,
    #[serde(default = "default_shift")]
    pub hardening_shift: f64,
    #[serde(default)]
    pub curves: BTreeMap<String, FragilityCurve>,
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub lines: Vec<Line>,
    #[serde(default)]
    pub switches: Vec<Switch>,
    #[serde(default)]
    pub dgs: Vec<DistributedGenerator>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum EdgeKind {
    Line(usize),
    Switch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Edge {
    pub to: usize,
    pub kind: EdgeKind,
}

/// Index-based view of the network built during validation.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Topology {
    pub bus_index: HashMap<String, usize>,
    pub substation: usize,
    pub line_ends: Vec<(usize, usize)>,
    pub switch_ends: Vec<(usize, usize)>,
    pub dg_bus: Vec<usize>,
    pub adjacency: Vec<Vec<Edge>>,
    /// Fragility of each line after hardening.
    pub line_curves: Vec<FragilityCurve>,
}

/// A validated feeder network.
#[derive(Debug, Clone, PartialEq)]
pub struct FeederNetwork {
    doc: FeederDocument,
    topo: Topology,
}

impl FeederNetwork {
    pub fn from_document(doc: FeederDocument) -> Result<Self> {
        let topo = validate(&doc)?;
        Ok(FeederNetwork { doc, topo })
    }

    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self> {
        let doc: FeederDocument = toml::from_str(text).map_err(|e| Error::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })?;
        Self::from_document(doc)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.doc).expect("feeder document is always serializable")
    }

    pub fn document(&self) -> &FeederDocument {
        &self.doc
    }

    pub fn into_document(self) -> FeederDocument {
        self.doc
    }

    pub fn buses(&self) -> &[Bus] {
        &self.doc.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.doc.lines
    }

    pub fn switches(&self) -> &[Switch] {
        &self.doc.switches
    }

    pub fn dgs(&self) -> &[DistributedGenerator] {
        &self.doc.dgs
    }

    pub fn label(&self) -> ConfigLabel {
        self.doc.label
    }

    pub fn hardening_shift(&self) -> f64 {
        self.doc.hardening_shift
    }

    pub fn curves(&self) -> &BTreeMap<String, FragilityCurve> {
        &self.doc.curves
    }

    pub fn substation(&self) -> &Bus {
        &self.doc.buses[self.topo.substation]
    }

    pub fn substation_index(&self) -> usize {
        self.topo.substation
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.topo.bus_index.get(id).copied()
    }

    pub fn line_index(&self, id: &str) -> Option<usize> {
        self.doc.lines.iter().position(|l| l.id == id)
    }

    pub fn line_ends(&self, line: usize) -> (usize, usize) {
        self.topo.line_ends[line]
    }

    pub fn switch_ends(&self, switch: usize) -> (usize, usize) {
        self.topo.switch_ends[switch]
    }

    pub fn dg_bus(&self, dg: usize) -> usize {
        self.topo.dg_bus[dg]
    }

    pub(crate) fn adjacency(&self) -> &[Vec<Edge>] {
        &self.topo.adjacency
    }

    /// Fragility curve in force for a line, with hardening applied.
    pub fn effective_curve(&self, line: usize) -> &FragilityCurve {
        &self.topo.line_curves[line]
    }

    pub fn total_load_kw(&self) -> f64 {
        self.doc.buses.iter().map(|b| b.load_kw).sum()
    }

    /// Switch states with every normally-closed switch closed.
    pub fn normal_switch_states(&self) -> Vec<bool> {
        self.doc.switches.iter().map(|s| !s.normally_open).collect()
    }

    /// Buses, lines and switches match (DGs, curves, and labels may differ).
    pub fn same_topology(&self, other: &FeederNetwork) -> bool {
        let buses = |n: &FeederNetwork| n.doc.buses.iter().map(|b| b.id.clone()).collect::<Vec<_>>();
        let lines = |n: &FeederNetwork| {
            n.doc
                .lines
                .iter()
                .map(|l| (l.id.clone(), l.from_bus.clone(), l.to_bus.clone()))
                .collect::<Vec<_>>()
        };
        let switches = |n: &FeederNetwork| {
            n.doc
                .switches
                .iter()
                .map(|s| {
                    (
                        s.id.clone(),
                        s.from_bus.clone(),
                        s.to_bus.clone(),
                        s.kind,
                        s.normally_open,
                    )
                })
                .collect::<Vec<_>>()
        };
        buses(self) == buses(other) && lines(self) == lines(other) && switches(self) == switches(other)
    }

    /// Builds a modified copy and re-validates it.
    pub fn modified(&self, edit: impl FnOnce(&mut FeederDocument) -> Result<()>) -> Result<Self> {
        let mut doc = self.doc.clone();
        edit(&mut doc)?;
        Self::from_document(doc)
    }

    pub fn with_label(&self, label: ConfigLabel) -> Result<Self> {
        self.modified(|doc| {
            doc.label = label;
            Ok(())
        })
    }

    /// Marks the listed lines hardened and sets the hardening shift.
    pub fn with_hardening(&self, lines: &[String], shift: f64) -> Result<Self> {
        self.modified(|doc| {
            for id in lines {
                let line = doc
                    .lines
                    .iter_mut()
                    .find(|l| &l.id == id)
                    .ok_or_else(|| Error::config("hardening.lines", format!("unknown line `{id}`")))?;
                line.hardened = true;
            }
            doc.hardening_shift = shift;
            Ok(())
        })
    }

    pub fn with_dg_at(&self, dg_id: &str, bus: &str) -> Result<Self> {
        self.modified(|doc| {
            let dg = doc
                .dgs
                .iter_mut()
                .find(|d| d.id == dg_id)
                .ok_or_else(|| Error::config("dg_relocations", format!("unknown DG `{dg_id}`")))?;
            dg.bus = bus.to_string();
            Ok(())
        })
    }

    /// Bus mask of everything reachable from the substation through intact
    /// lines and closed switches. Slices are indexed by line/switch ordinal.
    pub fn energized_mask(&self, line_up: &[bool], switch_closed: &[bool]) -> Vec<bool> {
        let n = self.doc.buses.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::with_capacity(n);
        seen[self.topo.substation] = true;
        queue.push_back(self.topo.substation);
        while let Some(bus) = queue.pop_front() {
            for edge in &self.topo.adjacency[bus] {
                let passable = match edge.kind {
                    EdgeKind::Line(i) => line_up[i],
                    EdgeKind::Switch(i) => switch_closed[i],
                };
                if passable && !seen[edge.to] {
                    seen[edge.to] = true;
                    queue.push_back(edge.to);
                }
            }
        }
        seen
    }
}

/// Reads and validates a feeder file.
pub fn load_feeder(path: impl AsRef<Path>) -> Result<FeederNetwork> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    FeederNetwork::from_toml_str(&text, &path.display().to_string())
}

/// Ids of buses energized from the substation. Lines missing from `line_up`
/// count as intact; switches missing from `switch_closed` keep their normal state.
pub fn energized_set(
    net: &FeederNetwork,
    line_up: &HashMap<String, bool>,
    switch_closed: &HashMap<String, bool>,
) -> BTreeSet<String> {
    let lines: Vec<bool> = net
        .lines()
        .iter()
        .map(|l| line_up.get(&l.id).copied().unwrap_or(true))
        .collect();
    let switches: Vec<bool> = net
        .switches()
        .iter()
        .map(|s| switch_closed.get(&s.id).copied().unwrap_or(!s.normally_open))
        .collect();
    net.energized_mask(&lines, &switches)
        .into_iter()
        .zip(net.buses())
        .filter(|(on, _)| *on)
        .map(|(_, b)| b.id.clone())
        .collect()
}

fn validate(doc: &FeederDocument) -> Result<Topology> {
    let mut bus_index = HashMap::with_capacity(doc.buses.len());
    let mut substation = None;
    for (i, bus) in doc.buses.iter().enumerate() {
        if bus.id.is_empty() {
            return Err(Error::validation(format!("buses[{i}]"), "empty bus id"));
        }
        if bus_index.insert(bus.id.clone(), i).is_some() {
            return Err(Error::validation(&bus.id, "duplicate bus id"));
        }
        if !(bus.load_kw.is_finite() && bus.load_kw >= 0.0) {
            return Err(Error::validation(&bus.id, "load_kw must be finite and nonnegative"));
        }
        if bus.is_substation {
            if let Some(prev) = substation {
                let prev: &Bus = &doc.buses[prev];
                return Err(Error::validation(
                    &bus.id,
                    format!("second substation bus (already `{}`)", prev.id),
                ));
            }
            substation = Some(i);
        }
    }
    let substation = substation.ok_or_else(|| Error::validation("buses", "no substation bus defined"))?;

    for (name, curve) in &doc.curves {
        curve.validate(&format!("curves.{name}"))?;
    }
    if !(doc.hardening_shift.is_finite() && doc.hardening_shift >= 0.0) {
        return Err(Error::validation("hardening_shift", "must be finite and nonnegative"));
    }

    let resolve = |element: &str, field: &str, id: &str| -> Result<usize> {
        bus_index
            .get(id)
            .copied()
            .ok_or_else(|| Error::validation(element, format!("{field} `{id}` is not a defined bus")))
    };

    let mut branch_ids = HashSet::new();
    let mut adjacency = vec![Vec::new(); doc.buses.len()];
    let mut line_ends = Vec::with_capacity(doc.lines.len());
    let mut line_curves = Vec::with_capacity(doc.lines.len());
    for (i, line) in doc.lines.iter().enumerate() {
        if !branch_ids.insert(line.id.as_str()) {
            return Err(Error::validation(&line.id, "duplicate line/switch id"));
        }
        let a = resolve(&line.id, "from_bus", &line.from_bus)?;
        let b = resolve(&line.id, "to_bus", &line.to_bus)?;
        if a == b {
            return Err(Error::validation(&line.id, "self-loop"));
        }
        let curve = doc.curves.get(&line.fragility).ok_or_else(|| {
            Error::validation(&line.id, format!("fragility curve `{}` is not defined", line.fragility))
        })?;
        line_curves.push(if line.hardened {
            curve.hardened(doc.hardening_shift)
        } else {
            *curve
        });
        adjacency[a].push(Edge {
            to: b,
            kind: EdgeKind::Line(i),
        });
        adjacency[b].push(Edge {
            to: a,
            kind: EdgeKind::Line(i),
        });
        line_ends.push((a, b));
    }

    let mut switch_ends = Vec::with_capacity(doc.switches.len());
    for (i, sw) in doc.switches.iter().enumerate() {
        if !branch_ids.insert(sw.id.as_str()) {
            return Err(Error::validation(&sw.id, "duplicate line/switch id"));
        }
        let a = resolve(&sw.id, "from_bus", &sw.from_bus)?;
        let b = resolve(&sw.id, "to_bus", &sw.to_bus)?;
        if a == b {
            return Err(Error::validation(&sw.id, "self-loop"));
        }
        adjacency[a].push(Edge {
            to: b,
            kind: EdgeKind::Switch(i),
        });
        adjacency[b].push(Edge {
            to: a,
            kind: EdgeKind::Switch(i),
        });
        switch_ends.push((a, b));
    }

    let mut dg_ids = HashSet::new();
    let mut dg_bus = Vec::with_capacity(doc.dgs.len());
    for dg in &doc.dgs {
        if !dg_ids.insert(dg.id.as_str()) {
            return Err(Error::validation(&dg.id, "duplicate DG id"));
        }
        if !(dg.capacity_kw.is_finite() && dg.capacity_kw > 0.0) {
            return Err(Error::validation(&dg.id, "capacity_kw must be positive"));
        }
        dg_bus.push(resolve(&dg.id, "bus", &dg.bus)?);
    }

    let total: f64 = doc.buses.iter().map(|b| b.load_kw).sum();
    if total <= 0.0 {
        return Err(Error::validation("buses", "total load must be positive"));
    }

    let topo = Topology {
        bus_index,
        substation,
        line_ends,
        switch_ends,
        dg_bus,
        adjacency,
        line_curves,
    };

    // Intact network with normal switch states must reach every bus.
    let probe = FeederNetwork { doc: doc.clone(), topo };
    let lines_up = vec![true; doc.lines.len()];
    let reach = probe.energized_mask(&lines_up, &probe.normal_switch_states());
    if let Some(i) = reach.iter().position(|on| !on) {
        return Err(Error::validation(
            &doc.buses[i].id,
            "not connected to the substation in the intact network",
        ));
    }
    Ok(probe.topo)
}
