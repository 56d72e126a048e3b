//! Detected conflicts.

use core::cmp::Ordering;
use core::fmt;

use crate::geometry::Vec2;
use crate::model::{CrosswalkRole, MovementCode, ObjectClass, ObjectId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConflictKind {
    P2V,
    V2V,
}

impl ConflictKind {
    /// `None` for pedestrian–pedestrian pairs, which are not studied.
    pub fn of(a: ObjectClass, b: ObjectClass) -> Option<ConflictKind> {
        match (a.is_vehicle(), b.is_vehicle()) {
            (true, true) => Some(ConflictKind::V2V),
            (false, false) => None,
            _ => Some(ConflictKind::P2V),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConflictKind::P2V => "P2V",
            ConflictKind::V2V => "V2V",
        }
    }
}

impl fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Ttc,
    Pet,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Ttc => "TTC",
            Metric::Pet => "PET",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// P2V conflict type 1–6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct P2vType(u8);

impl P2vType {
    pub fn new(n: u8) -> Option<P2vType> {
        (1..=6).contains(&n).then_some(P2vType(n))
    }

    pub fn number(self) -> u8 {
        self.0
    }
}

impl fmt::Display for P2vType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One P2V or V2V interaction. Participants are ordered so that
/// `id_a < id_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictEvent {
    pub kind: ConflictKind,
    pub metric: Metric,
    /// Seconds.
    pub value: f64,
    pub t: f64,
    pub location: Vec2,
    pub id_a: ObjectId,
    pub class_a: ObjectClass,
    pub id_b: ObjectId,
    pub class_b: ObjectClass,
    /// Movement of the (first) vehicle participant; `None` when
    /// unclassifiable or not yet classified.
    pub movement: Option<MovementCode>,
    pub p2v_type: Option<P2vType>,
    pub ped_role: Option<CrosswalkRole>,
    pub severe: bool,
    pub jaywalk: bool,
}

impl ConflictEvent {
    /// Build an unclassified event, ordering the participants by id.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        kind: ConflictKind,
        metric: Metric,
        value: f64,
        t: f64,
        location: Vec2,
        a: (ObjectId, ObjectClass),
        b: (ObjectId, ObjectClass),
        severe: bool,
    ) -> Self {
        let (a, b) = if a.0 <= b.0 { (a, b) } else { (b, a) };
        ConflictEvent {
            kind,
            metric,
            value,
            t,
            location,
            id_a: a.0,
            class_a: a.1,
            id_b: b.0,
            class_b: b.1,
            movement: None,
            p2v_type: None,
            ped_role: None,
            severe,
            jaywalk: false,
        }
    }

    pub fn involves(&self, id: &ObjectId) -> bool {
        &self.id_a == id || &self.id_b == id
    }

    /// Pedestrian participant of a P2V event.
    pub fn pedestrian(&self) -> Option<&ObjectId> {
        match (self.class_a, self.class_b) {
            (ObjectClass::Pedestrian, c) if c.is_vehicle() => Some(&self.id_a),
            (c, ObjectClass::Pedestrian) if c.is_vehicle() => Some(&self.id_b),
            _ => None,
        }
    }

    /// First vehicle participant.
    pub fn vehicle(&self) -> Option<&ObjectId> {
        if self.class_a.is_vehicle() {
            Some(&self.id_a)
        } else if self.class_b.is_vehicle() {
            Some(&self.id_b)
        } else {
            None
        }
    }

    /// Canonical output order: time, then participants, then metric.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.t
            .total_cmp(&other.t)
            .then_with(|| self.id_a.cmp(&other.id_a))
            .then_with(|| self.id_b.cmp(&other.id_b))
            .then_with(|| self.metric.cmp(&other.metric))
            .then_with(|| self.value.total_cmp(&other.value))
    }
}

pub fn sort_events(events: &mut [ConflictEvent]) {
    events.sort_by(ConflictEvent::canonical_cmp);
}
