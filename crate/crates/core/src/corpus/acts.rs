use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The closed set of system dialog acts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DialogAct {
    Welcome,
    RequestDeparture,
    RequestArrival,
    RequestTime,
    ImplicitConfirm,
    ExplicitConfirm,
    InformResult,
    KbQuery,
    Goodbye,
    CantHelp,
    Repeat,
    Restart,
    ChatResponse,
    Instructions,
}

impl DialogAct {
    pub const ALL: [DialogAct; 14] = [
        DialogAct::Welcome,
        DialogAct::RequestDeparture,
        DialogAct::RequestArrival,
        DialogAct::RequestTime,
        DialogAct::ImplicitConfirm,
        DialogAct::ExplicitConfirm,
        DialogAct::InformResult,
        DialogAct::KbQuery,
        DialogAct::Goodbye,
        DialogAct::CantHelp,
        DialogAct::Repeat,
        DialogAct::Restart,
        DialogAct::ChatResponse,
        DialogAct::Instructions,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DialogAct::Welcome => "welcome",
            DialogAct::RequestDeparture => "request-departure",
            DialogAct::RequestArrival => "request-arrival",
            DialogAct::RequestTime => "request-time",
            DialogAct::ImplicitConfirm => "implicit-confirm",
            DialogAct::ExplicitConfirm => "explicit-confirm",
            DialogAct::InformResult => "inform-result",
            DialogAct::KbQuery => "kb-query",
            DialogAct::Goodbye => "goodbye",
            DialogAct::CantHelp => "cant-help",
            DialogAct::Repeat => "repeat",
            DialogAct::Restart => "restart",
            DialogAct::ChatResponse => "chat-response",
            DialogAct::Instructions => "instructions",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for DialogAct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DialogAct {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DialogAct::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| format!("unknown dialog act `{s}`"))
    }
}
