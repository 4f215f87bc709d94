use std::fmt::Write as _;
use std::net::Ipv4Addr;

use super::command::ConfigCommand;
use crate::pep::FilterRule;
use crate::simcore::Ipv4Net;

/// Renders commands as Linux `tc` invocations for the audit log.
///
/// tc accepts any address inside a prefix, and operators usually write a
/// known host (`192.168.20.10/24`). Prefixes containing one of `hosts` are
/// rendered with that host address.
#[derive(Clone, Debug)]
pub struct TcRenderer {
    pub dev: String,
    pub hosts: Vec<Ipv4Addr>,
}

/// Source host of the testbed's tagged flow.
pub const DEFAULT_RENDER_HOSTS: [Ipv4Addr; 1] = [Ipv4Addr::new(192, 168, 20, 10)];

impl Default for TcRenderer {
    fn default() -> Self {
        TcRenderer {
            dev: "eth0".into(),
            hosts: DEFAULT_RENDER_HOSTS.to_vec(),
        }
    }
}

impl TcRenderer {
    fn prefix(&self, n: &Ipv4Net) -> String {
        let addr = match n.prefix_len() {
            0 | 32 => n.network(),
            _ => self
                .hosts
                .iter()
                .copied()
                .find(|h| n.contains(*h))
                .unwrap_or(n.network()),
        };
        format!("{addr}/{}", n.prefix_len())
    }

    fn matches(&self, f: &FilterRule) -> String {
        let mut s = String::new();
        if let Some(n) = &f.match_src {
            write!(s, " match ip src {}", self.prefix(n)).unwrap();
        }
        if let Some(n) = &f.match_dst {
            write!(s, " match ip dst {}", self.prefix(n)).unwrap();
        }
        if let Some(t) = &f.match_tos {
            write!(s, " match ip tos {:#x} {:#x}", t.value, t.mask).unwrap();
        }
        s
    }

    pub fn render(&self, cmd: &ConfigCommand) -> Vec<String> {
        let dev = &self.dev;
        let mut out = Vec::new();
        if let Some((class, a)) = &cmd.dsmark {
            out.push(format!(
                "tc class change dev {dev} classid {class} dsmark mask {:#x} value {:#x}",
                a.mask, a.value
            ));
        }
        for f in &cmd.filters {
            let police = cmd
                .policers
                .iter()
                .find(|(c, _)| *c == f.class_id)
                .map(|(_, tb)| format!(" police rate {}bit burst {} drop", tb.rate_bps(), tb.burst_bytes()))
                .unwrap_or_default();
            out.push(format!(
                "tc filter add dev {dev} parent 1:0 protocol ip prio {} u32{}{police} flow id {}",
                f.priority,
                self.matches(f),
                f.class_id
            ));
        }
        out
    }

    /// Commands that undo `cmd`.
    pub fn render_removal(&self, cmd: &ConfigCommand) -> Vec<String> {
        let dev = &self.dev;
        let mut out: Vec<String> = cmd
            .filters
            .iter()
            .map(|f| format!("tc filter del dev {dev} parent 1:0 protocol ip prio {} u32", f.priority))
            .collect();
        if let Some((class, _)) = &cmd.dsmark {
            out.push(format!(
                "tc class change dev {dev} classid {class} dsmark mask 0xff value 0x0"
            ));
        }
        out
    }
}

pub fn render_tc(cmd: &ConfigCommand) -> Vec<String> {
    TcRenderer::default().render(cmd)
}
