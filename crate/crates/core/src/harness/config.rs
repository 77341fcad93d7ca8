//! Experiment configuration: a JSON document (one object or an array of
//! objects) with optional command-line overrides.

use serde::{Deserialize, Serialize};

use crate::ap2t::FrameLayout;
use crate::bits::BitString;
use crate::channel::{AdversaryKind, AdversaryModel};
use crate::error::{Error, Result};
use crate::padstream::{GeneratorId, PadStream};
use crate::refresh::RefreshPolicy;
use crate::session::PairSpec;
use crate::types::{default_keyword, ProtocolId, ProtocolParams};

/// Keyword length used when a config gives neither `keyword_len` nor `keywords`.
pub const DEFAULT_KEYWORD_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n: usize,
    pub l: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keyword_len: Option<usize>,
    /// Binary strings such as `"1010"`. Empty means the single default keyword.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keywords: Vec<String>,
}

impl ParamsConfig {
    pub fn new(n: usize, l: usize, keyword_len: usize) -> Self {
        Self { n, l, keyword_len: Some(keyword_len), keywords: Vec::new() }
    }

    pub fn resolve(&self) -> Result<ProtocolParams> {
        let keywords = self
            .keywords
            .iter()
            .map(|k| BitString::parse_binary(k))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| field("params.keywords", e))?;
        let keyword_len = self
            .keyword_len
            .or_else(|| keywords.first().map(BitString::len))
            .unwrap_or(DEFAULT_KEYWORD_LEN);
        let keywords = if keywords.is_empty() { vec![default_keyword(keyword_len)] } else { keywords };
        ProtocolParams::new(self.n, self.l, keyword_len, keywords).map_err(|e| field("params", e))
    }
}

/// Free parameters of a tamper-evident frame; both default from the params.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<usize>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub protocol: ProtocolId,
    pub params: ParamsConfig,
    #[serde(default)]
    pub refresh: RefreshPolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutConfig>,
    #[serde(default)]
    pub adversary: AdversaryModel,
    /// Defaults to atomic sessions unless the adversary edits frames in flight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atomic: Option<bool>,
    pub trials: u64,
    #[serde(default = "one")]
    pub sessions_per_trial: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub generator_id: GeneratorId,
}

/// Command-line replacements for individual config fields.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub protocol: Option<ProtocolId>,
    pub n: Option<usize>,
    pub l: Option<usize>,
    pub trials: Option<u64>,
    pub master_seed: Option<u64>,
}

fn field(name: &str, e: Error) -> Error {
    Error::Config(format!("{name}: {e}"))
}

impl ExperimentConfig {
    pub fn new(protocol: ProtocolId, params: ParamsConfig, trials: u64, master_seed: u64) -> Self {
        Self {
            name: None,
            protocol,
            params,
            refresh: RefreshPolicy::dense(),
            layout: None,
            adversary: AdversaryModel::none(),
            atomic: None,
            trials,
            sessions_per_trial: 1,
            master_seed,
            generator_id: GeneratorId::default(),
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(p) = o.protocol {
            self.protocol = p;
        }
        if let Some(n) = o.n {
            self.params.n = n;
        }
        if let Some(l) = o.l {
            self.params.l = l;
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(s) = o.master_seed {
            self.master_seed = s;
        }
    }

    pub fn is_atomic(&self) -> bool {
        self.atomic.unwrap_or(self.adversary.kind != AdversaryKind::BitflipIima)
    }

    /// Checks every field and returns the pair setup it describes.
    pub fn validate(&self) -> Result<PairSpec> {
        if self.trials == 0 {
            return Err(Error::Config("trials: must be positive".into()));
        }
        if self.sessions_per_trial == 0 {
            return Err(Error::Config("sessions_per_trial: must be positive".into()));
        }
        let params = self.params.resolve()?;
        self.refresh.validate(params.n()).map_err(|e| field("refresh", e))?;
        let layout = match (self.protocol, self.layout) {
            (ProtocolId::Ap2t, Some(cfg)) => {
                Some(FrameLayout::for_params(&params, cfg.dims, cfg.v).map_err(|e| field("layout", e))?)
            }
            (_, Some(_)) => {
                return Err(Error::Config(format!("layout: only used by ap2t, not {}", self.protocol)));
            }
            (_, None) => None,
        };
        let spec = PairSpec { protocol: self.protocol, params, refresh: self.refresh, layout, generator: self.generator_id };
        spec.validate().map_err(|e| field("protocol", e))?;
        self.adversary.check(self.is_atomic()).map_err(|e| field("adversary", e))?;
        self.adversary
            .listening
            .realize(&mut PadStream::new(0, self.generator_id), self.sessions_per_trial)
            .map_err(|e| field("adversary.listening", e))?;
        Ok(spec)
    }

    /// `name`, or `<protocol>-<adversary>` when unnamed.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| format!("{}-{}", self.protocol, self.adversary.kind.name()))
    }
}

/// Parses a single config object or an array of them.
pub fn load_configs(text: &str) -> Result<Vec<ExperimentConfig>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
    let parse = |v: serde_json::Value| serde_json::from_value::<ExperimentConfig>(v).map_err(|e| Error::Config(e.to_string()));
    match value {
        serde_json::Value::Array(items) if items.is_empty() => Err(Error::Config("config array is empty".into())),
        serde_json::Value::Array(items) => items.into_iter().map(parse).collect(),
        other => Ok(vec![parse(other)?]),
    }
}
