//! World Object Model.
//!
//! A WOM is a structural, ontology-agnostic view of the world under test: an
//! agent position plus a forest of entities, each carrying a type tag, a
//! position, a timestamp and a flat map of scalar properties. Nesting is
//! expressed through child entities only.
//!
//! The agent keeps one WOM as its belief and folds every observation it
//! receives into it with [`merge`]. Entries that stop being observed are kept
//! (they may be stale); [`staleness`] tells how old an entry is.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::de::{self, Deserializer};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tick number as reported by the system under test.
pub type Tick = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WomError {
    #[error("duplicate entity id `{0}` within observation")]
    DuplicateIdWithinObservation(String),
    #[error("entity `{0}` appears under different parents in belief and observation")]
    ConflictingParent(String),
    #[error("non-finite coordinate in position")]
    NonFinitePosition,
}

/// A point in world space. The bundled simulator only uses integral
/// coordinates: grid column on `x`, grid row on `z`, and `y == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

// Integral coordinates are written as JSON integers so that the wire form
// stays decimal and exact.
fn serialize_coord<S: SerializeTuple>(seq: &mut S, v: f64) -> Result<(), S::Error> {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        seq.serialize_element(&(v as i64))
    } else {
        seq.serialize_element(&v)
    }
}

impl Serialize for Vec3 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_tuple(3)?;
        serialize_coord(&mut seq, self.x)?;
        serialize_coord(&mut seq, self.y)?;
        serialize_coord(&mut seq, self.z)?;
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Vec3 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(deserializer)?;
        let v = Vec3 { x, y, z };
        if !v.is_finite() {
            return Err(de::Error::custom(WomError::NonFinitePosition));
        }
        Ok(v)
    }
}

/// Property value. Properties are deliberately flat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Str(String),
}

impl Scalar {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Scalar::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Scalar::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Scalar::Str(s) => Some(s),
            _ => None,
        }
    }
}

impl From<bool> for Scalar {
    fn from(v: bool) -> Self {
        Scalar::Bool(v)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::Int(v)
    }
}

impl From<&str> for Scalar {
    fn from(v: &str) -> Self {
        Scalar::Str(v.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct WorldEntity {
    pub id: String,
    pub entity_type: String,
    pub position: Vec3,
    pub timestamp: Tick,
    #[serde(default)]
    pub properties: BTreeMap<String, Scalar>,
    #[serde(default)]
    pub children: Vec<WorldEntity>,
}

impl WorldEntity {
    pub fn new(
        id: impl Into<String>,
        entity_type: impl Into<String>,
        position: Vec3,
        timestamp: Tick,
    ) -> Self {
        Self {
            id: id.into(),
            entity_type: entity_type.into(),
            position,
            timestamp,
            properties: BTreeMap::new(),
            children: Vec::new(),
        }
    }

    pub fn with_property(mut self, key: impl Into<String>, value: impl Into<Scalar>) -> Self {
        self.properties.insert(key.into(), value.into());
        self
    }

    pub fn with_child(mut self, child: WorldEntity) -> Self {
        self.children.push(child);
        self
    }

    pub fn property(&self, key: &str) -> Option<&Scalar> {
        self.properties.get(key)
    }

    pub fn find(&self, id: &str) -> Option<&WorldEntity> {
        if self.id == id {
            return Some(self);
        }
        self.children.iter().find_map(|c| c.find(id))
    }

    fn max_timestamp(&self) -> Tick {
        self.children
            .iter()
            .map(WorldEntity::max_timestamp)
            .fold(self.timestamp, Tick::max)
    }

    fn collect_ids<'a>(&'a self, out: &mut Vec<&'a str>) {
        out.push(&self.id);
        for c in &self.children {
            c.collect_ids(out);
        }
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a WorldEntity)) {
        f(self);
        for c in &self.children {
            c.visit(f);
        }
    }
}

/// The agent's (or one observation's) view of the world.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(
    rename_all = "camelCase",
    try_from = "RawWorldModel",
    into = "RawWorldModel"
)]
pub struct WorldModel {
    pub agent_id: String,
    pub agent_position: Vec3,
    pub timestamp: Tick,
    /// Root entities keyed by id.
    pub entities: BTreeMap<String, WorldEntity>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawWorldModel {
    agent_id: String,
    agent_position: Vec3,
    timestamp: Tick,
    #[serde(default)]
    entities: Vec<WorldEntity>,
}

impl TryFrom<RawWorldModel> for WorldModel {
    type Error = WomError;

    fn try_from(raw: RawWorldModel) -> Result<Self, Self::Error> {
        let mut entities = BTreeMap::new();
        for e in raw.entities {
            if entities.contains_key(&e.id) {
                return Err(WomError::DuplicateIdWithinObservation(e.id));
            }
            entities.insert(e.id.clone(), e);
        }
        Ok(WorldModel {
            agent_id: raw.agent_id,
            agent_position: raw.agent_position,
            timestamp: raw.timestamp,
            entities,
        })
    }
}

impl From<WorldModel> for RawWorldModel {
    fn from(m: WorldModel) -> Self {
        RawWorldModel {
            agent_id: m.agent_id,
            agent_position: m.agent_position,
            timestamp: m.timestamp,
            entities: m.entities.into_values().collect(),
        }
    }
}

impl WorldModel {
    pub fn new(agent_id: impl Into<String>, agent_position: Vec3, timestamp: Tick) -> Self {
        Self {
            agent_id: agent_id.into(),
            agent_position,
            timestamp,
            entities: BTreeMap::new(),
        }
    }

    /// Adds (or replaces) a root entity and keeps `timestamp` consistent.
    pub fn with_entity(mut self, entity: WorldEntity) -> Self {
        self.timestamp = self.timestamp.max(entity.max_timestamp());
        self.entities.insert(entity.id.clone(), entity);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    /// Looks an entity up anywhere in the tree.
    pub fn get_element(&self, id: &str) -> Option<&WorldEntity> {
        if let Some(e) = self.entities.get(id) {
            return Some(e);
        }
        self.entities.values().find_map(|e| e.find(id))
    }

    /// Every entity in the tree, in pre-order over roots sorted by id.
    pub fn all_entities(&self) -> Vec<&WorldEntity> {
        let mut out = Vec::new();
        for e in self.entities.values() {
            e.visit(&mut |x| out.push(x));
        }
        out
    }

    pub fn ids(&self) -> BTreeSet<String> {
        self.all_entities()
            .into_iter()
            .map(|e| e.id.clone())
            .collect()
    }

    fn first_duplicate_id(&self) -> Option<String> {
        let mut ids = Vec::new();
        for e in self.entities.values() {
            e.collect_ids(&mut ids);
        }
        let mut seen = BTreeSet::new();
        ids.into_iter()
            .find(|id| !seen.insert(*id))
            .map(str::to_owned)
    }

    fn recompute_timestamp(&mut self) {
        self.timestamp = self
            .entities
            .values()
            .map(WorldEntity::max_timestamp)
            .fold(self.timestamp, Tick::max);
    }
}

fn merge_entity(existing: &mut WorldEntity, incoming: &WorldEntity) {
    if incoming.timestamp > existing.timestamp {
        existing.entity_type.clone_from(&incoming.entity_type);
        existing.position = incoming.position;
        existing.timestamp = incoming.timestamp;
        existing.properties.clone_from(&incoming.properties);
    }
    for child in &incoming.children {
        match existing.children.iter_mut().find(|c| c.id == child.id) {
            Some(slot) => merge_entity(slot, child),
            None => existing.children.push(child.clone()),
        }
    }
}

/// Folds `observation` into `belief`.
///
/// Per id, the strictly newer version wins and ties keep the belief. Entities
/// absent from the observation are retained. The agent position is taken from
/// the observation unless the belief is strictly newer.
pub fn merge(belief: &WorldModel, observation: &WorldModel) -> Result<WorldModel, WomError> {
    if let Some(id) = observation.first_duplicate_id() {
        return Err(WomError::DuplicateIdWithinObservation(id));
    }
    let mut out = belief.clone();
    for (id, incoming) in &observation.entities {
        match out.entities.get_mut(id) {
            Some(existing) => merge_entity(existing, incoming),
            None => {
                out.entities.insert(id.clone(), incoming.clone());
            }
        }
    }
    if observation.timestamp >= belief.timestamp {
        out.agent_id.clone_from(&observation.agent_id);
        out.agent_position = observation.agent_position;
    }
    out.timestamp = belief.timestamp.max(observation.timestamp);
    out.recompute_timestamp();
    if let Some(id) = out.first_duplicate_id() {
        return Err(WomError::ConflictingParent(id));
    }
    Ok(out)
}

/// Ticks since `id` was last observed, or `None` if it was never observed.
pub fn staleness(model: &WorldModel, id: &str, now: Tick) -> Option<Tick> {
    model
        .get_element(id)
        .map(|e| now.saturating_sub(e.timestamp))
}
