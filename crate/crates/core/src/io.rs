//! JSON formats for instances, schedules and JSONL corpora.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Interrogation, ModelError, NodeId, ProblemInstance, Schedule, Tag, TagId, Timeslot, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("malformed JSON: {0}")]
    Json(String),
    #[error("field `{field}`: {rule}")]
    Invalid { field: &'static str, rule: String },
}

impl ParseError {
    fn invalid(field: &'static str, rule: impl Into<String>) -> Self {
        ParseError::Invalid {
            field,
            rule: rule.into(),
        }
    }

    pub fn field(&self) -> Option<&'static str> {
        match self {
            ParseError::Invalid { field, .. } => Some(field),
            ParseError::Json(_) => None,
        }
    }
}

impl From<ModelError> for ParseError {
    fn from(e: ModelError) -> Self {
        let field = match &e {
            ModelError::EmptyTopology => "nodes",
            ModelError::NodeOutOfRange(..)
            | ModelError::SelfLoop(_)
            | ModelError::DuplicateEdge(..)
            | ModelError::Disconnected(_) => "edges",
            ModelError::NoTags
            | ModelError::ZeroTagId
            | ModelError::DuplicateTag(_)
            | ModelError::HostOutOfRange { .. } => "tags",
        };
        let rule = match &e {
            ModelError::Disconnected(_) => format!("connectivity violated, {e}"),
            ModelError::DuplicateTag(_) => format!("uniqueness violated, {e}"),
            _ => e.to_string(),
        };
        ParseError::invalid(field, rule)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    nodes: usize,
    edges: Vec<[NodeId; 2]>,
    tags: Vec<Tag>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RecordDoc {
    node: NodeId,
    tag: TagId,
    carrier: NodeId,
}

#[derive(Debug, Serialize, Deserialize)]
struct SlotDoc {
    interrogations: Vec<RecordDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ScheduleDoc {
    #[serde(rename = "L")]
    slots_len: usize,
    #[serde(rename = "C")]
    carriers: usize,
    slots: Vec<SlotDoc>,
}

fn json_err(e: serde_json::Error) -> ParseError {
    ParseError::Json(e.to_string())
}

/// Parses `{"nodes": N, "edges": [[u, v], ...], "tags": [{"id": k, "host": u}, ...]}`.
pub fn parse_instance(text: &str) -> Result<ProblemInstance, ParseError> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(json_err)?;
    instance_from_doc(doc)
}

fn instance_from_doc(doc: InstanceDoc) -> Result<ProblemInstance, ParseError> {
    let edges: Vec<_> = doc.edges.iter().map(|&[u, v]| (u, v)).collect();
    let topology = Topology::new(doc.nodes, &edges)?;
    Ok(ProblemInstance::new(topology, doc.tags)?)
}

fn instance_doc(instance: &ProblemInstance) -> InstanceDoc {
    InstanceDoc {
        nodes: instance.node_count(),
        edges: instance.topology().edges().iter().map(|&(u, v)| [u, v]).collect(),
        tags: instance.tags().to_vec(),
    }
}

pub fn emit_instance(instance: &ProblemInstance) -> String {
    serde_json::to_string(&instance_doc(instance)).expect("instance serializes")
}

/// Emits `{"L": L, "C": C, "slots": [{"interrogations": [{"node", "tag", "carrier"}]}]}`.
pub fn emit_schedule(_instance: &ProblemInstance, schedule: &Schedule) -> String {
    let doc = ScheduleDoc {
        slots_len: schedule.len(),
        carriers: schedule.carrier_count(),
        slots: schedule
            .slots
            .iter()
            .map(|slot| SlotDoc {
                interrogations: slot
                    .interrogations
                    .iter()
                    .map(|i| RecordDoc {
                        node: i.host,
                        tag: i.tag,
                        carrier: i.carrier,
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string(&doc).expect("schedule serializes")
}

/// Parses a schedule for `instance`. Role vectors are rebuilt from the
/// interrogation records; `L` and `C` must agree with the rebuilt slots.
/// Feasibility is not checked here, see [`crate::validate_schedule`].
pub fn parse_schedule(instance: &ProblemInstance, text: &str) -> Result<Schedule, ParseError> {
    let doc: ScheduleDoc = serde_json::from_str(text).map_err(json_err)?;
    let n = instance.node_count();
    let mut slots = Vec::with_capacity(doc.slots.len());
    for (s, slot) in doc.slots.into_iter().enumerate() {
        let mut records = Vec::with_capacity(slot.interrogations.len());
        for r in slot.interrogations {
            if r.node >= n {
                return Err(ParseError::invalid("node", format!("slot {s}: node {} not in [0, {n})", r.node)));
            }
            if r.carrier >= n {
                return Err(ParseError::invalid(
                    "carrier",
                    format!("slot {s}: node {} not in [0, {n})", r.carrier),
                ));
            }
            records.push(Interrogation {
                host: r.node,
                tag: r.tag,
                carrier: r.carrier,
            });
        }
        slots.push(Timeslot::from_interrogations(n, records));
    }
    let schedule = Schedule::new(slots);
    if doc.slots_len != schedule.len() {
        return Err(ParseError::invalid(
            "L",
            format!("declared {} but {} slots are listed", doc.slots_len, schedule.len()),
        ));
    }
    if doc.carriers != schedule.carrier_count() {
        return Err(ParseError::invalid(
            "C",
            format!("declared {} but the slots use {}", doc.carriers, schedule.carrier_count()),
        ));
    }
    Ok(schedule)
}

/// One instance per line.
pub fn emit_corpus(corpus: &[ProblemInstance]) -> String {
    let mut out = String::new();
    for instance in corpus {
        out.push_str(&emit_instance(instance));
        out.push('\n');
    }
    out
}

/// Parses a JSONL corpus, skipping blank lines. Errors carry the 1-based line.
pub fn parse_corpus(text: &str) -> Result<Vec<ProblemInstance>, (usize, ParseError)> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| parse_instance(line).map_err(|e| (i + 1, e)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{solve_heuristic, validate_schedule};

    #[test]
    fn parses_path_instance() {
        let inst = parse_instance(r#"{"nodes":2,"edges":[[0,1]],"tags":[{"id":1,"host":0}]}"#).unwrap();
        assert_eq!(inst.node_count(), 2);
        assert_eq!(inst.tags(), &[Tag { id: 1, host: 0 }]);
        assert_eq!(
            emit_instance(&inst),
            r#"{"nodes":2,"edges":[[0,1]],"tags":[{"id":1,"host":0}]}"#
        );
    }

    #[test]
    fn invariant_errors_name_field_and_rule() {
        let e = parse_instance(r#"{"nodes":3,"edges":[[0,1]],"tags":[{"id":1,"host":0}]}"#).unwrap_err();
        assert_eq!(e.field(), Some("edges"));
        assert!(e.to_string().contains("connectivity"));
        let e = parse_instance(r#"{"nodes":2,"edges":[[0,1]],"tags":[{"id":1,"host":0},{"id":1,"host":1}]}"#)
            .unwrap_err();
        assert_eq!(e.field(), Some("tags"));
        assert!(e.to_string().contains("uniqueness"));
        assert!(matches!(parse_instance("{\"nodes\":"), Err(ParseError::Json(_))));
        assert!(matches!(
            parse_instance(r#"{"nodes":2,"edges":[[0,1]],"tags":[{"id":-1,"host":0}]}"#),
            Err(ParseError::Json(_))
        ));
    }

    #[test]
    fn schedule_round_trip() {
        let inst = parse_instance(r#"{"nodes":3,"edges":[[0,1],[1,2]],"tags":[{"id":1,"host":0},{"id":2,"host":2}]}"#)
            .unwrap();
        let sched = solve_heuristic(&inst).unwrap();
        let text = emit_schedule(&inst, &sched);
        assert_eq!(
            text,
            r#"{"L":1,"C":1,"slots":[{"interrogations":[{"node":0,"tag":1,"carrier":1},{"node":2,"tag":2,"carrier":1}]}]}"#
        );
        let back = parse_schedule(&inst, &text).unwrap();
        assert_eq!(back, sched);
        assert!(validate_schedule(&inst, &back).unwrap().valid);
    }

    #[test]
    fn schedule_bounds_and_totals() {
        let inst = parse_instance(r#"{"nodes":2,"edges":[[0,1]],"tags":[{"id":1,"host":0}]}"#).unwrap();
        let e = parse_schedule(&inst, r#"{"L":1,"C":1,"slots":[{"interrogations":[{"node":0,"tag":1,"carrier":5}]}]}"#)
            .unwrap_err();
        assert_eq!(e.field(), Some("carrier"));
        let e = parse_schedule(&inst, r#"{"L":2,"C":1,"slots":[{"interrogations":[{"node":0,"tag":1,"carrier":1}]}]}"#)
            .unwrap_err();
        assert_eq!(e.field(), Some("L"));
        let e = parse_schedule(&inst, r#"{"L":1,"C":0,"slots":[{"interrogations":[{"node":0,"tag":1,"carrier":1}]}]}"#)
            .unwrap_err();
        assert_eq!(e.field(), Some("C"));
    }

    #[test]
    fn corpus_lines() {
        let a = parse_instance(r#"{"nodes":2,"edges":[[0,1]],"tags":[{"id":1,"host":0}]}"#).unwrap();
        let text = emit_corpus(&[a.clone(), a.clone()]);
        assert_eq!(parse_corpus(&text).unwrap(), vec![a.clone(), a]);
        let err = parse_corpus("\n{}\n").unwrap_err();
        assert_eq!(err.0, 2);
    }
}
