use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use petgraph::unionfind::UnionFind;

use crate::arena::{Arena, MoveId, Polarity};
use crate::backend::Netlist;
use crate::parse::parse_type;
use crate::plays::protocol_automaton;
use crate::strategy::{denote_constant, diagonal, Strategy};
use crate::syncmin::{minimize, minimize_under_protocol, round_abstract, SyncMachine};
use crate::syntax::{Constant, Type};

use super::SimError;

/// What an instance was built from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Kind {
    Const(Constant),
    /// Activation manager for the given type.
    Diagonal(Type),
    /// A whole term compiled to a single machine.
    Flat,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::Const(c) => write!(f, "{c}"),
            Kind::Diagonal(t) => write!(f, "diag {t}"),
            Kind::Flat => f.write_str("flat"),
        }
    }
}

/// The behaviour of an instance: a machine, or the netlist realizing it.
#[derive(Clone, Debug)]
pub enum Device {
    Machine(SyncMachine),
    Netlist(Netlist),
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub name: String,
    pub kind: Kind,
    pub arena: Arena,
    pub device: Device,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    /// A port of the design's interface.
    Top(MoveId),
    Inst(usize, MoveId),
}

#[derive(Clone, Debug)]
pub struct Net {
    pub name: String,
    pub endpoints: Vec<Endpoint>,
    pub driver: Option<Endpoint>,
}

/// Synchronous machines wired point to point behind an interface arena.
/// The environment drives the interface's O-moves and observes its P-moves.
#[derive(Clone, Debug)]
pub struct Design {
    pub iface_type: Type,
    pub iface: Arena,
    pub instances: Vec<Instance>,
    pub nets: Vec<Net>,
    pub(crate) top_net: Vec<usize>,
    pub(crate) inst_net: Vec<Vec<usize>>,
}

fn cache<K: std::hash::Hash + Eq + Clone>(
    store: &'static OnceLock<Mutex<HashMap<K, SyncMachine>>>,
    key: &K,
    build: impl FnOnce() -> SyncMachine,
) -> SyncMachine {
    let map = store.get_or_init(Default::default);
    if let Some(m) = map.lock().unwrap().get(key) {
        return m.clone();
    }
    let m = build();
    map.lock().unwrap().insert(key.clone(), m.clone());
    m
}

/// The synchronous, protocol-minimized machine of a constant.
pub fn constant_machine(c: Constant) -> SyncMachine {
    static STORE: OnceLock<Mutex<HashMap<Constant, SyncMachine>>> = OnceLock::new();
    cache(&STORE, &c, || {
        let m = round_abstract(&denote_constant(c).automaton).expect("constants abstract");
        minimize_under_protocol(&m, &protocol_automaton(&m.arena))
    })
}

/// The synchronous activation manager at type `t`, ports renamed as in
/// [`am_arena`].
pub fn am_machine(t: &Type) -> SyncMachine {
    static STORE: OnceLock<Mutex<HashMap<Type, SyncMachine>>> = OnceLock::new();
    cache(&STORE, t, || {
        let d = diagonal(t, "x");
        let mut m = minimize(&round_abstract(&d.automaton).expect("diagonals abstract"));
        m.arena = am_arena(t);
        m
    })
}

/// The arena of `⟨x, x⟩ : t × t` over `x : t`, with ports named by side and
/// position: side 2 is the left projection, 1 the right and 0 the shared
/// copy; a base occurrence gets one prime per occurrence to its right, so
/// at `com -> com` the result is `Q'k`/`A'k` and the argument `Qk`/`Ak`.
pub fn am_arena(t: &Type) -> Arena {
    let n = t.base_occurrences();
    Strategy::interface_arena(&[("x".into(), t.clone())], &Type::product(t.clone(), t.clone())).renamed(|m| {
        let side = ["2", "1", "0"][m.occurrence / n];
        let primes = "'".repeat(n - 1 - m.occurrence % n);
        format!("{}{primes}{side}", m.base.label().to_uppercase())
    })
}

impl Instance {
    pub fn new(name: &str, kind: Kind) -> Instance {
        let m = match &kind {
            Kind::Const(c) => constant_machine(*c),
            Kind::Diagonal(t) => am_machine(t),
            Kind::Flat => panic!("flat instances are built with Instance::machine"),
        };
        Instance::machine(name, kind, m)
    }

    pub fn machine(name: &str, kind: Kind, m: SyncMachine) -> Instance {
        Instance { name: name.into(), kind, arena: m.arena.clone(), device: Device::Machine(m) }
    }

    pub fn is_am(&self) -> bool {
        matches!(self.kind, Kind::Diagonal(_))
    }

    fn drives(&self, m: MoveId) -> bool {
        self.arena.get(m).polarity == Polarity::P
    }
}

/// Incremental construction: every port is a point, connections merge points.
#[derive(Default)]
pub struct Builder {
    instances: Vec<Instance>,
    /// Point of each instance port.
    ports: Vec<Vec<usize>>,
    links: Vec<(usize, usize)>,
    points: usize,
}

impl Builder {
    pub fn new() -> Builder {
        Builder::default()
    }

    pub fn fresh(&mut self, n: usize) -> Vec<usize> {
        let v = (self.points..self.points + n).collect();
        self.points += n;
        v
    }

    /// Adds an instance; returns the points of its ports in arena order.
    pub fn add(&mut self, inst: Instance) -> Vec<usize> {
        let pts = self.fresh(inst.arena.len());
        self.instances.push(inst);
        self.ports.push(pts.clone());
        pts
    }

    pub fn instance_names(&self) -> impl Iterator<Item = &str> {
        self.instances.iter().map(|i| i.name.as_str())
    }

    pub fn instance(&self, name: &str) -> Option<(usize, &Instance)> {
        self.instances.iter().enumerate().find(|(_, i)| i.name == name)
    }

    pub fn port(&self, inst: usize, m: MoveId) -> usize {
        self.ports[inst][m.0]
    }

    pub fn connect(&mut self, a: usize, b: usize) {
        self.links.push((a, b));
    }

    pub fn connect_all(&mut self, a: &[usize], b: &[usize]) {
        assert_eq!(a.len(), b.len(), "mismatched interfaces");
        for (x, y) in a.iter().zip(b) {
            self.connect(*x, *y);
        }
    }

    /// Closes the design with `top[k]` the point of interface move `k`.
    pub fn finish(self, iface_type: Type, top: &[usize]) -> Result<Design, SimError> {
        let iface = Arena::of_type(&iface_type);
        assert_eq!(iface.len(), top.len(), "interface size");
        let mut uf = UnionFind::<usize>::new(self.points);
        for (a, b) in &self.links {
            uf.union(*a, *b);
        }
        let mut net_of_root: BTreeMap<usize, usize> = BTreeMap::new();
        let mut nets: Vec<Net> = Vec::new();
        let mut attach = |p: usize, e: Endpoint| -> usize {
            let root = uf.find(p);
            let k = *net_of_root.entry(root).or_insert_with(|| {
                nets.push(Net { name: String::new(), endpoints: Vec::new(), driver: None });
                nets.len() - 1
            });
            nets[k].endpoints.push(e);
            k
        };
        let top_net: Vec<usize> = top.iter().enumerate().map(|(k, p)| attach(*p, Endpoint::Top(MoveId(k)))).collect();
        let inst_net: Vec<Vec<usize>> = self
            .ports
            .iter()
            .enumerate()
            .map(|(i, pts)| pts.iter().enumerate().map(|(k, p)| attach(*p, Endpoint::Inst(i, MoveId(k)))).collect())
            .collect();
        let mut d = Design { iface_type, iface, instances: self.instances, nets, top_net, inst_net };
        d.assign_drivers()?;
        d.name_nets();
        Ok(d)
    }
}

impl Design {
    /// A design holding a single machine behind its own interface.
    pub fn single(name: &str, kind: Kind, ty: Type, m: SyncMachine) -> Design {
        let mut b = Builder::new();
        let pts = b.add(Instance::machine(name, kind, m));
        b.finish(ty, &pts).expect("a single machine is well wired")
    }

    pub fn endpoint_name(&self, e: Endpoint) -> String {
        match e {
            Endpoint::Top(m) => format!("top.{}", self.iface.name(m)),
            Endpoint::Inst(i, m) => format!("{}.{}", self.instances[i].name, self.instances[i].arena.name(m)),
        }
    }

    fn assign_drivers(&mut self) -> Result<(), SimError> {
        for k in 0..self.nets.len() {
            let drivers: Vec<Endpoint> = self.nets[k]
                .endpoints
                .iter()
                .copied()
                .filter(|e| match *e {
                    Endpoint::Top(m) => self.iface.get(m).polarity == Polarity::O,
                    Endpoint::Inst(i, m) => self.instances[i].drives(m),
                })
                .collect();
            if drivers.len() > 1 {
                let names = drivers.iter().map(|e| self.endpoint_name(*e)).collect();
                return Err(SimError::MultipleDrivers(names));
            }
            self.nets[k].driver = drivers.first().copied();
        }
        Ok(())
    }

    /// Nets touching an activation manager take its port name (qualified if
    /// there are several managers), then interface names, then `inst.port`.
    fn name_nets(&mut self) {
        let ams = self.instances.iter().filter(|i| i.is_am()).count();
        let mut used: BTreeMap<String, usize> = BTreeMap::new();
        for k in 0..self.nets.len() {
            let eps = &self.nets[k].endpoints;
            let am = eps.iter().find_map(|e| match *e {
                Endpoint::Inst(i, m) if self.instances[i].is_am() => Some(if ams == 1 {
                    self.instances[i].arena.name(m).to_string()
                } else {
                    self.endpoint_name(*e)
                }),
                _ => None,
            });
            let top = eps.iter().find_map(|e| match *e {
                Endpoint::Top(m) => Some(self.iface.name(m).to_string()),
                _ => None,
            });
            let mut name = am.or(top).unwrap_or_else(|| self.endpoint_name(eps[0]));
            if used.contains_key(&name) {
                name = self.endpoint_name(eps[0]);
            }
            used.insert(name.clone(), k);
            self.nets[k].name = name;
        }
    }

    pub fn net_by_name(&self, name: &str) -> Option<usize> {
        self.nets.iter().position(|n| n.name == name)
    }

    /// Resolves an interface port by net name, arena name, or `top.name`.
    pub fn top_port(&self, name: &str) -> Option<MoveId> {
        let bare = name.strip_prefix("top.").unwrap_or(name);
        if let Some(m) = self.iface.by_name(bare) {
            return Some(m);
        }
        let net = self.net_by_name(name)?;
        self.iface.ids().find(|m| self.top_net[m.0] == net)
    }

    pub fn net_of_top(&self, m: MoveId) -> usize {
        self.top_net[m.0]
    }

    pub fn net_of(&self, inst: usize, m: MoveId) -> usize {
        self.inst_net[inst][m.0]
    }

    /// Total state count, a rough size measure.
    pub fn states(&self) -> usize {
        self.instances
            .iter()
            .map(|i| match &i.device {
                Device::Machine(m) => m.num_states(),
                Device::Netlist(n) => n.registers.max(1),
            })
            .sum()
    }

    /// Replaces every machine by its netlist realization.
    pub fn to_netlists(&self) -> Result<Design, crate::backend::BackendError> {
        let mut d = self.clone();
        for inst in &mut d.instances {
            if let Device::Machine(m) = &inst.device {
                inst.device = Device::Netlist(crate::backend::to_netlist(m)?);
            }
        }
        Ok(d)
    }

    /// Text listing in the wiring-file syntax.
    pub fn to_wiring(&self) -> String {
        let mut s = format!("iface {}\n", self.iface_type);
        for i in &self.instances {
            s += &format!("inst {} {}\n", i.name, i.kind);
        }
        for n in &self.nets {
            if let Some(d) = n.driver {
                for e in n.endpoints.iter().filter(|e| **e != d) {
                    s += &format!("{} -> {}\n", self.endpoint_name(d), self.endpoint_name(*e));
                }
            }
        }
        s
    }
}

/// Parses a wiring file:
///
/// ```text
/// iface (com -> com) -> com
/// inst am diag com -> com
/// inst s skip
/// top.q1 -> am.Q'2
/// ```
///
/// `inst NAME KIND` declares an instance of a constant or `diag TYPE`;
/// `a.p -> b.q` joins two ports, `top` naming the interface.
pub fn parse_wiring(text: &str) -> Result<Design, SimError> {
    let err = |line: usize, msg: String| SimError::Wiring { line, msg };
    let mut iface: Option<(Type, Arena)> = None;
    let mut b = Builder::new();
    let mut top: Vec<usize> = Vec::new();
    let mut links: Vec<(usize, String, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("iface ") {
            let t = parse_type(rest).map_err(|e| err(line_no, e.to_string()))?;
            let a = Arena::of_type(&t);
            top = b.fresh(a.len());
            iface = Some((t, a));
        } else if let Some(rest) = line.strip_prefix("inst ") {
            let mut parts = rest.trim().splitn(2, char::is_whitespace);
            let name = parts.next().unwrap_or("");
            let kind = parts.next().unwrap_or("").trim();
            if name.is_empty() || name == "top" || b.instance(name).is_some() {
                return Err(err(line_no, format!("bad or duplicate instance name `{name}`")));
            }
            let kind = if let Some(t) = kind.strip_prefix("diag") {
                Kind::Diagonal(parse_type(t.trim()).map_err(|e| err(line_no, e.to_string()))?)
            } else {
                Kind::Const(Constant::from_name(kind).ok_or_else(|| err(line_no, format!("unknown kind `{kind}`")))?)
            };
            b.add(Instance::new(name, kind));
        } else if let Some((l, r)) = line.split_once("->") {
            links.push((line_no, l.trim().to_string(), r.trim().to_string()));
        } else {
            return Err(err(line_no, format!("cannot parse `{line}`")));
        }
    }
    let (ty, iface) = iface.ok_or_else(|| err(0, "missing `iface` line".into()))?;
    let resolve = |b: &Builder, line: usize, r: &str| -> Result<usize, SimError> {
        let (inst, port) = r.split_once('.').ok_or_else(|| err(line, format!("expected inst.port, got `{r}`")))?;
        if inst == "top" {
            let m = iface.by_name(port).ok_or_else(|| err(line, format!("no interface port `{port}`")))?;
            return Ok(top[m.0]);
        }
        let (i, ins) = b.instance(inst).ok_or_else(|| err(line, format!("no instance `{inst}`")))?;
        let m = ins.arena.by_name(port).ok_or_else(|| err(line, format!("`{inst}` has no port `{port}`")))?;
        Ok(b.port(i, m))
    };
    for (line, l, r) in &links {
        let (x, y) = (resolve(&b, *line, l)?, resolve(&b, *line, r)?);
        b.connect(x, y);
    }
    b.finish(ty, &top)
}
