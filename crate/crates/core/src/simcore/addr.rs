use std::fmt;
use std::net::Ipv4Addr;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid IPv4 prefix '{0}'")]
pub struct PrefixParseError(pub String);

/// An IPv4 prefix, always stored in normalized (network address) form.
///
/// `192.168.20.10/24` parses to `192.168.20.0/24`; a bare address parses
/// as a `/32`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ipv4Net {
    network: u32,
    len: u8,
}

impl Ipv4Net {
    pub const ANY: Ipv4Net = Ipv4Net { network: 0, len: 0 };

    pub fn new(addr: Ipv4Addr, len: u8) -> Result<Self, PrefixParseError> {
        if len > 32 {
            return Err(PrefixParseError(format!("{addr}/{len}")));
        }
        Ok(Ipv4Net {
            network: u32::from(addr) & mask(len),
            len,
        })
    }

    pub fn host(addr: Ipv4Addr) -> Self {
        Ipv4Net {
            network: u32::from(addr),
            len: 32,
        }
    }

    pub fn network(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.network)
    }

    pub fn prefix_len(&self) -> u8 {
        self.len
    }

    #[inline]
    pub fn contains(&self, addr: Ipv4Addr) -> bool {
        u32::from(addr) & mask(self.len) == self.network
    }
}

#[inline]
fn mask(len: u8) -> u32 {
    if len == 0 {
        0
    } else {
        u32::MAX << (32 - len as u32)
    }
}

impl FromStr for Ipv4Net {
    type Err = PrefixParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PrefixParseError(s.to_string());
        match s.split_once('/') {
            Some((a, l)) => {
                let addr: Ipv4Addr = a.parse().map_err(|_| err())?;
                let len: u8 = l.parse().map_err(|_| err())?;
                Ipv4Net::new(addr, len).map_err(|_| err())
            }
            None => s.parse().map(Ipv4Net::host).map_err(|_| err()),
        }
    }
}

impl fmt::Display for Ipv4Net {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.network(), self.len)
    }
}

impl serde::Serialize for Ipv4Net {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Ipv4Net {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
