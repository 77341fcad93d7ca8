//! Independent tag/verifier pairs addressed by tag id.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::session::{AnyTag, AnyVerifier, PairSpec, Tag, Verifier};
use crate::types::Verdict;
use crate::wire::KeyMessage;

#[derive(Debug, Clone)]
pub struct RegisteredPair {
    pub tag: AnyTag,
    pub verifier: AnyVerifier,
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    pairs: BTreeMap<String, RegisteredPair>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn tag_ids(&self) -> impl Iterator<Item = &str> {
        self.pairs.keys().map(String::as_str)
    }

    pub fn register_pair(&mut self, tag_id: &str, spec: &PairSpec, vector_seed: u64, tag_seed: u64) -> Result<()> {
        if self.pairs.contains_key(tag_id) {
            return Err(Error::DuplicateTag(tag_id.to_string()));
        }
        let (tag, verifier) = spec.build(vector_seed, tag_seed)?;
        self.pairs.insert(tag_id.to_string(), RegisteredPair { tag, verifier });
        Ok(())
    }

    pub fn lookup(&self, tag_id: &str) -> Result<&RegisteredPair> {
        self.pairs.get(tag_id).ok_or_else(|| Error::UnknownTag(tag_id.to_string()))
    }

    pub fn lookup_mut(&mut self, tag_id: &str) -> Result<&mut RegisteredPair> {
        self.pairs.get_mut(tag_id).ok_or_else(|| Error::UnknownTag(tag_id.to_string()))
    }

    /// Starts a session on the tag of `tag_id`.
    pub fn begin(&mut self, tag_id: &str) -> Result<KeyMessage> {
        self.lookup_mut(tag_id)?.tag.begin_session()
    }

    /// Hands `msg` to the verifier state kept for `tag_id`.
    pub fn deliver(&mut self, tag_id: &str, msg: &KeyMessage) -> Result<Verdict> {
        Ok(self.lookup_mut(tag_id)?.verifier.handle(msg))
    }

    pub fn complete(&mut self, tag_id: &str, verdict: Verdict) -> Result<()> {
        self.lookup_mut(tag_id)?.tag.complete_session(verdict)
    }

    /// One honest session for `tag_id`.
    pub fn session(&mut self, tag_id: &str) -> Result<Verdict> {
        let msg = self.begin(tag_id)?;
        let verdict = self.deliver(tag_id, &msg)?;
        self.complete(tag_id, verdict)?;
        Ok(verdict)
    }
}
