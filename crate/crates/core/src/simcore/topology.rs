use std::collections::VecDeque;
use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::addr::Ipv4Net;
use super::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("duplicate node '{0}'")]
    DuplicateNode(String),
    #[error("duplicate interface '{0}'")]
    DuplicateInterface(String),
    #[error("unknown node '{0}'")]
    UnknownNode(String),
    #[error("unknown interface '{0}'")]
    UnknownInterface(String),
    #[error("interface '{0}' is already attached to a link")]
    AlreadyLinked(String),
    #[error("link endpoints must be on different nodes ({0})")]
    SelfLink(String),
    #[error("link capacity must be positive ({0})")]
    InvalidCapacity(String),
    #[error("interface '{0}' is not attached to a link")]
    Unattached(String),
    #[error("no route from '{node}' to {dst}")]
    NoRoute { node: String, dst: Ipv4Addr },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InterfaceId {
    pub node: NodeId,
    pub index: u16,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinkId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Edge,
    Core,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Edge => "edge",
            Role::Core => "core",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Interface {
    pub id: InterfaceId,
    pub name: String,
    /// Faces an edge network rather than another router. Edge PEPs apply
    /// ingress marking and policing on access interfaces.
    pub access: bool,
    /// Edge networks reachable through this (access) interface.
    pub networks: Vec<Ipv4Net>,
    pub link: Option<LinkId>,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub role: Role,
    pub address: Ipv4Addr,
    pub interfaces: Vec<Interface>,
}

#[derive(Clone, Debug)]
pub struct Link {
    pub id: LinkId,
    pub a: InterfaceId,
    pub b: InterfaceId,
    pub capacity_bps: u64,
    pub prop_delay: SimTime,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hop {
    Local,
    Out(InterfaceId),
}

#[derive(Clone, Debug, Default)]
pub struct Topology {
    nodes: Vec<Node>,
    links: Vec<Link>,
    routes: Vec<Vec<(Ipv4Net, Hop)>>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, name: &str, role: Role, address: Ipv4Addr) -> Result<NodeId, TopologyError> {
        if self.nodes.iter().any(|n| n.name == name) {
            return Err(TopologyError::DuplicateNode(name.to_string()));
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            id,
            name: name.to_string(),
            role,
            address,
            interfaces: Vec::new(),
        });
        self.routes.clear();
        Ok(id)
    }

    pub fn add_interface(&mut self, node: NodeId, name: &str, access: bool) -> Result<InterfaceId, TopologyError> {
        let n = self
            .nodes
            .get_mut(node.0 as usize)
            .ok_or_else(|| TopologyError::UnknownNode(format!("#{}", node.0)))?;
        if n.interfaces.iter().any(|i| i.name == name) {
            return Err(TopologyError::DuplicateInterface(format!("{}:{name}", n.name)));
        }
        let id = InterfaceId {
            node,
            index: n.interfaces.len() as u16,
        };
        n.interfaces.push(Interface {
            id,
            name: name.to_string(),
            access,
            networks: Vec::new(),
            link: None,
        });
        self.routes.clear();
        Ok(id)
    }

    pub fn add_network(&mut self, iface: InterfaceId, net: Ipv4Net) -> Result<(), TopologyError> {
        self.interface_mut(iface)?.networks.push(net);
        self.routes.clear();
        Ok(())
    }

    /// Connects two interfaces with a full-duplex link.
    pub fn connect(
        &mut self,
        a: InterfaceId,
        b: InterfaceId,
        capacity_bps: u64,
        prop_delay: SimTime,
    ) -> Result<LinkId, TopologyError> {
        let label = format!("{}<->{}", self.iface_name(a), self.iface_name(b));
        if a.node == b.node {
            return Err(TopologyError::SelfLink(label));
        }
        if capacity_bps == 0 {
            return Err(TopologyError::InvalidCapacity(label));
        }
        for end in [a, b] {
            if self.interface(end)?.link.is_some() {
                return Err(TopologyError::AlreadyLinked(self.iface_name(end)));
            }
        }
        let id = LinkId(self.links.len() as u32);
        self.links.push(Link {
            id,
            a,
            b,
            capacity_bps,
            prop_delay,
        });
        self.interface_mut(a)?.link = Some(id);
        self.interface_mut(b)?.link = Some(id);
        self.routes.clear();
        Ok(id)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn link(&self, id: LinkId) -> &Link {
        &self.links[id.0 as usize]
    }

    pub fn interface(&self, id: InterfaceId) -> Result<&Interface, TopologyError> {
        self.nodes
            .get(id.node.0 as usize)
            .and_then(|n| n.interfaces.get(id.index as usize))
            .ok_or_else(|| TopologyError::UnknownInterface(format!("#{}.{}", id.node.0, id.index)))
    }

    fn interface_mut(&mut self, id: InterfaceId) -> Result<&mut Interface, TopologyError> {
        self.nodes
            .get_mut(id.node.0 as usize)
            .and_then(|n| n.interfaces.get_mut(id.index as usize))
            .ok_or_else(|| TopologyError::UnknownInterface(format!("#{}.{}", id.node.0, id.index)))
    }

    pub fn interfaces(&self) -> impl Iterator<Item = &Interface> {
        self.nodes.iter().flat_map(|n| n.interfaces.iter())
    }

    pub fn node_by_name(&self, name: &str) -> Result<NodeId, TopologyError> {
        self.nodes
            .iter()
            .find(|n| n.name == name)
            .map(|n| n.id)
            .ok_or_else(|| TopologyError::UnknownNode(name.to_string()))
    }

    /// Resolves `"node:interface"`.
    pub fn iface_by_name(&self, qualified: &str) -> Result<InterfaceId, TopologyError> {
        let (node, iface) = qualified
            .split_once(':')
            .ok_or_else(|| TopologyError::UnknownInterface(qualified.to_string()))?;
        let n = self.node(self.node_by_name(node)?);
        n.interfaces
            .iter()
            .find(|i| i.name == iface)
            .map(|i| i.id)
            .ok_or_else(|| TopologyError::UnknownInterface(qualified.to_string()))
    }

    pub fn iface_name(&self, id: InterfaceId) -> String {
        match self.interface(id) {
            Ok(i) => format!("{}:{}", self.node(id.node).name, i.name),
            Err(_) => format!("#{}.{}", id.node.0, id.index),
        }
    }

    /// The interface at the other end of `id`'s link.
    pub fn peer(&self, id: InterfaceId) -> Option<InterfaceId> {
        let link = self.link(self.interface(id).ok()?.link?);
        Some(if link.a == id { link.b } else { link.a })
    }

    pub fn node_owning(&self, addr: Ipv4Addr) -> Option<NodeId> {
        self.nodes.iter().find(|n| n.address == addr).map(|n| n.id)
    }

    /// Access interface whose edge networks contain `addr`.
    pub fn access_iface_for(&self, addr: Ipv4Addr) -> Option<InterfaceId> {
        self.interfaces()
            .filter(|i| i.access)
            .flat_map(|i| i.networks.iter().map(move |n| (n, i.id)))
            .filter(|(n, _)| n.contains(addr))
            .max_by_key(|(n, _)| n.prefix_len())
            .map(|(_, id)| id)
    }

    /// Computes hop-count shortest-path routes for every node address and
    /// every edge network.
    pub fn compute_routes(&mut self) {
        let n = self.nodes.len();
        let mut routes: Vec<Vec<(Ipv4Net, Hop)>> = vec![Vec::new(); n];
        for dst in 0..n {
            // BFS backwards from dst; next_hop[v] = interface of v toward dst
            let mut next_hop: Vec<Option<Hop>> = vec![None; n];
            next_hop[dst] = Some(Hop::Local);
            let mut queue = VecDeque::from([dst]);
            while let Some(u) = queue.pop_front() {
                for iface in &self.nodes[u].interfaces {
                    let Some(link) = iface.link else { continue };
                    let link = &self.links[link.0 as usize];
                    let far = if link.a == iface.id { link.b } else { link.a };
                    let v = far.node.0 as usize;
                    if next_hop[v].is_none() {
                        next_hop[v] = Some(Hop::Out(far));
                        queue.push_back(v);
                    }
                }
            }
            let dst_node = &self.nodes[dst];
            let mut prefixes = vec![(Ipv4Net::host(dst_node.address), Hop::Local)];
            for iface in dst_node.interfaces.iter().filter(|i| i.access) {
                for net in &iface.networks {
                    prefixes.push((*net, Hop::Out(iface.id)));
                }
            }
            for (v, hop) in next_hop.iter().enumerate() {
                let Some(hop) = hop else { continue };
                for (net, local_hop) in &prefixes {
                    let h = if v == dst { *local_hop } else { *hop };
                    routes[v].push((*net, h));
                }
            }
        }
        for table in &mut routes {
            // longest prefix first; stable keeps insertion order among equals
            table.sort_by_key(|e| std::cmp::Reverse(e.0.prefix_len()));
        }
        self.routes = routes;
    }

    #[inline]
    pub fn route(&self, node: NodeId, dst: Ipv4Addr) -> Option<Hop> {
        self.routes
            .get(node.0 as usize)?
            .iter()
            .find(|(net, _)| net.contains(dst))
            .map(|(_, hop)| *hop)
    }

    pub fn routes_ready(&self) -> bool {
        self.routes.len() == self.nodes.len()
    }

    /// Interfaces traversed from `src` to the node owning or serving `dst`.
    pub fn path(&self, src: NodeId, dst: Ipv4Addr) -> Result<Vec<InterfaceId>, TopologyError> {
        let mut out = Vec::new();
        let mut at = src;
        for _ in 0..=self.nodes.len() {
            match self.route(at, dst) {
                Some(Hop::Local) => return Ok(out),
                Some(Hop::Out(i)) => {
                    out.push(i);
                    match self.peer(i) {
                        Some(p) => at = p.node,
                        None => return Ok(out),
                    }
                }
                None => break,
            }
        }
        Err(TopologyError::NoRoute {
            node: self.node(src).name.clone(),
            dst,
        })
    }
}
