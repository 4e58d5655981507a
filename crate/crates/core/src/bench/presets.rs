use std::fmt;
use std::str::FromStr;

use crate::logic::Formula;
use crate::syntax::{parse, SyntaxError};

/// The bundled properties.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Malicious headers on any assigned handler are violations.
    YawsHeaders,
    /// As `YawsHeaders`, with connections and violations synchronous.
    YawsHeadersSync,
    /// Successor replies.
    SuccServer,
    /// Successor replies; replies that are too large are synchronous violations.
    SuccServerHybrid,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::YawsHeaders, Preset::YawsHeadersSync, Preset::SuccServer, Preset::SuccServerHybrid];

    pub fn name(self) -> &'static str {
        match self {
            Preset::YawsHeaders => "yaws_headers",
            Preset::YawsHeadersSync => "yaws_headers_sync",
            Preset::SuccServer => "succ_server",
            Preset::SuccServerHybrid => "succ_server_hybrid",
        }
    }

    pub fn source(self) -> &'static str {
        match self {
            Preset::YawsHeaders => include_str!("../../../../properties/yaws_headers.hml"),
            Preset::YawsHeadersSync => include_str!("../../../../properties/yaws_headers_sync.hml"),
            Preset::SuccServer => include_str!("../../../../properties/succ_server.hml"),
            Preset::SuccServerHybrid => include_str!("../../../../properties/succ_server_hybrid.hml"),
        }
    }

    pub fn formula(self) -> Formula {
        parse(self.source()).expect("bundled properties parse")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Preset::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown preset {s:?}"))
    }
}

/// Parses a formula given either as a preset name or as formula text.
pub fn formula_or_preset(text: &str) -> Result<Formula, SyntaxError> {
    match text.trim().parse::<Preset>() {
        Ok(p) => Ok(p.formula()),
        Err(_) => parse(text),
    }
}
