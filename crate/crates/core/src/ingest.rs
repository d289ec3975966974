//! Cascade logs: a JSONL event stream, one object per line.
//!
//! ```json
//! {"cascade_id":"page-1","actor":"u7","parent_actor":null,"action":"create","timestamp":1452729600}
//! {"cascade_id":"page-1","actor":"u9","parent_actor":"u7","action":"view","timestamp":1452729710}
//! {"cascade_id":"page-1","actor":"u9","parent_actor":"u7","action":"forward","timestamp":1452729712}
//! ```
//!
//! `parent_actor` is omitted or null for `create` and required otherwise.
//! Within a cascade, events are ordered by timestamp (ties keep file order).
//! Only the first view and the first forward of each actor count. A view's
//! parent must have created or forwarded the page earlier; a forward needs an
//! earlier view by the same actor.

use std::collections::{HashMap, HashSet};
use std::fmt::Display;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{estimate_gamma_from_counts, fit_powerlaw_tail, CreatorPolicy, PowerLawFit};
use crate::graph::Tree;
use crate::metrics::{bin_tree_metrics, SizeBinnedStats, TreeMetrics};
use crate::svfr::{CascadeTree, Role};

/// Default inactivity cutoff: one day.
pub const DAY_SECONDS: i64 = 86_400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Create,
    View,
    Forward,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CascadeEvent {
    pub cascade_id: String,
    pub actor: String,
    #[serde(default)]
    pub parent_actor: Option<String>,
    pub action: Action,
    pub timestamp: i64,
}

/// Validated events of one cascade, time-ordered.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CascadeRecord {
    pub cascade_id: String,
    pub events: Vec<CascadeEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CascadeLog {
    /// In order of first appearance in the input.
    pub cascades: Vec<CascadeRecord>,
    /// Repeated (actor, action) events that were discarded.
    pub duplicates_dropped: usize,
}

/// Parses and validates a JSONL event stream.
pub fn parse_events<R: BufRead>(reader: R) -> Result<CascadeLog> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<(String, Vec<CascadeEvent>)> = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ev: CascadeEvent = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: ln + 1,
            message: e.to_string(),
        })?;
        match (ev.action, &ev.parent_actor) {
            (Action::Create, Some(_)) => {
                return Err(Error::Parse {
                    line: ln + 1,
                    message: "create event must not have a parent_actor".into(),
                })
            }
            (Action::View | Action::Forward, None) => {
                return Err(Error::Parse {
                    line: ln + 1,
                    message: "view/forward event needs a parent_actor".into(),
                })
            }
            _ => {}
        }
        let g = *index.entry(ev.cascade_id.clone()).or_insert_with(|| {
            groups.push((ev.cascade_id.clone(), Vec::new()));
            groups.len() - 1
        });
        groups[g].1.push(ev);
    }

    let mut log = CascadeLog::default();
    for (id, mut events) in groups {
        events.sort_by_key(|e| e.timestamp);
        let (events, dropped) = validate_cascade(&id, events)?;
        log.duplicates_dropped += dropped;
        log.cascades.push(CascadeRecord {
            cascade_id: id,
            events,
        });
    }
    Ok(log)
}

fn validate_cascade(id: &str, events: Vec<CascadeEvent>) -> Result<(Vec<CascadeEvent>, usize)> {
    let fail = |message: String| Error::Integrity {
        cascade: id.to_string(),
        message,
    };
    let mut creator: Option<String> = None;
    let mut viewed: HashSet<String> = HashSet::new();
    let mut sharers: HashSet<String> = HashSet::new();
    let mut kept = Vec::with_capacity(events.len());
    let mut dropped = 0;
    for ev in events {
        match ev.action {
            Action::Create => {
                if let Some(c) = &creator {
                    return Err(fail(format!(
                        "second create by `{}` (creator is `{c}`)",
                        ev.actor
                    )));
                }
                creator = Some(ev.actor.clone());
                sharers.insert(ev.actor.clone());
                viewed.insert(ev.actor.clone());
                kept.push(ev);
            }
            Action::View | Action::Forward => {
                let parent = ev.parent_actor.as_deref().unwrap_or_default();
                let already = match ev.action {
                    Action::View => viewed.contains(&ev.actor),
                    _ => sharers.contains(&ev.actor),
                };
                if already {
                    dropped += 1;
                    continue;
                }
                if !sharers.contains(parent) {
                    return Err(fail(format!(
                        "`{}` got the page from `{parent}`, who has not created or forwarded it",
                        ev.actor
                    )));
                }
                if ev.action == Action::View {
                    viewed.insert(ev.actor.clone());
                } else {
                    if !viewed.contains(&ev.actor) {
                        return Err(fail(format!("`{}` forwards before viewing", ev.actor)));
                    }
                    sharers.insert(ev.actor.clone());
                }
                kept.push(ev);
            }
        }
    }
    if creator.is_none() {
        return Err(fail("no create event".into()));
    }
    Ok((kept, dropped))
}

/// A cascade tree built from a log, keyed by external user ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestedCascade {
    pub cascade_id: String,
    pub cascade: CascadeTree<String>,
}

/// Builds one tree per cascade. With `gap_cutoff_seconds`, a cascade ends at
/// the first silence longer than the cutoff and later events are ignored.
/// Arrival steps are seconds since the create event.
pub fn to_cascade_trees(log: &CascadeLog, gap_cutoff_seconds: Option<i64>) -> Vec<IngestedCascade> {
    log.cascades
        .iter()
        .map(|rec| IngestedCascade {
            cascade_id: rec.cascade_id.clone(),
            cascade: build_tree(&rec.events, gap_cutoff_seconds),
        })
        .collect()
}

fn build_tree(events: &[CascadeEvent], gap: Option<i64>) -> CascadeTree<String> {
    // Validation guarantees the create event precedes every view/forward.
    let start = events
        .iter()
        .position(|e| e.action == Action::Create)
        .expect("validated log has a create event");
    let t0 = events[start].timestamp;
    let mut node_of: HashMap<&str, u32> = HashMap::new();
    node_of.insert(&events[start].actor, 0);
    let mut parents = Vec::new();
    let mut roles = vec![Role::Creator];
    let mut node_ids = vec![events[start].actor.clone()];
    let mut arrival_step = vec![0u32];
    let mut prev = t0;
    for ev in &events[start + 1..] {
        if gap.is_some_and(|g| ev.timestamp - prev > g) {
            break;
        }
        prev = ev.timestamp;
        let parent = ev.parent_actor.as_deref().unwrap_or_default();
        match ev.action {
            Action::Create => {}
            Action::View => {
                let idx = node_ids.len() as u32;
                parents.push(node_of[parent]);
                node_of.insert(&ev.actor, idx);
                node_ids.push(ev.actor.clone());
                roles.push(Role::Viewer);
                arrival_step.push(u32::try_from(ev.timestamp - t0).unwrap_or(u32::MAX));
            }
            Action::Forward => {
                roles[node_of[ev.actor.as_str()] as usize] = Role::Forwarder;
            }
        }
    }
    CascadeTree {
        tree: Tree::from_parents_unchecked(parents),
        roles,
        node_ids,
        arrival_step,
        d_max_f: None,
    }
}

/// Event stream for a cascade, using arrival steps as timestamps. Every
/// forwarder emits its forward event right after its view.
pub fn cascade_to_events<Id: Display>(cascade_id: &str, c: &CascadeTree<Id>) -> Vec<CascadeEvent> {
    let mut out = Vec::with_capacity(c.size() + c.forwarder_count());
    for i in 0..c.size() {
        let actor = c.node_ids[i].to_string();
        let timestamp = c.arrival_step[i] as i64;
        let Some(p) = c.tree.parent(i) else {
            out.push(CascadeEvent {
                cascade_id: cascade_id.to_string(),
                actor,
                parent_actor: None,
                action: Action::Create,
                timestamp,
            });
            continue;
        };
        let parent_actor = Some(c.node_ids[p].to_string());
        out.push(CascadeEvent {
            cascade_id: cascade_id.to_string(),
            actor: actor.clone(),
            parent_actor: parent_actor.clone(),
            action: Action::View,
            timestamp,
        });
        if c.roles[i] == Role::Forwarder {
            out.push(CascadeEvent {
                cascade_id: cascade_id.to_string(),
                actor,
                parent_actor,
                action: Action::Forward,
                timestamp,
            });
        }
    }
    out
}

pub fn write_events<W: Write>(events: &[CascadeEvent], mut w: W) -> Result<()> {
    for ev in events {
        serde_json::to_writer(&mut w, ev)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Per-cascade row of [`analyze`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzedCascade {
    pub cascade_id: String,
    pub size: usize,
    /// Creator included.
    pub n_forwarders: usize,
    pub avg_path_length: Option<f64>,
    pub degree_variance: Option<f64>,
    pub degree_std: Option<f64>,
}

/// Structural analysis of a whole log.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub cascades: Vec<AnalyzedCascade>,
    /// Absent when no cascade reaches `x_min`.
    pub binned: Option<SizeBinnedStats<f64>>,
    /// Absent when fewer than two tail bins are populated.
    pub fit: Option<PowerLawFit<f64>>,
    /// Mean forward fraction over cascades of size `>= x_min`.
    pub gamma: Option<f64>,
    pub duplicates_dropped: usize,
}

/// Tree metrics per cascade, size-binned means from `x_min` up, and the
/// tail exponent of the size distribution.
pub fn analyze(
    log: &CascadeLog,
    gap_cutoff_seconds: Option<i64>,
    x_min: usize,
    bins_per_decade: usize,
) -> Result<Analysis> {
    let trees = to_cascade_trees(log, gap_cutoff_seconds);
    let mut metrics = Vec::new();
    let cascades: Vec<AnalyzedCascade> = trees
        .iter()
        .map(|c| {
            let m = TreeMetrics::<f64>::of(&c.cascade.tree).ok();
            metrics.extend(m);
            AnalyzedCascade {
                cascade_id: c.cascade_id.clone(),
                size: c.cascade.size(),
                n_forwarders: c.cascade.forwarder_count(),
                avg_path_length: m.map(|m| m.avg_path_length),
                degree_variance: m.map(|m| m.degree_variance),
                degree_std: m.map(|m| m.degree_std),
            }
        })
        .collect();
    let binned = match bin_tree_metrics(&metrics, x_min) {
        Ok(b) => Some(b),
        Err(Error::EmptyBins(_)) => None,
        Err(e) => return Err(e),
    };
    let sizes: Vec<usize> = cascades.iter().map(|c| c.size).collect();
    let fit = match fit_powerlaw_tail(&sizes, x_min, bins_per_decade) {
        Ok(f) => Some(f),
        Err(Error::InsufficientData(_)) => None,
        Err(e) => return Err(e),
    };
    let gamma = estimate_gamma_from_counts::<f64>(
        cascades
            .iter()
            .filter(|c| c.size >= x_min)
            .map(|c| (c.n_forwarders, c.size)),
        CreatorPolicy::default(),
    )
    .ok()
    .map(|g| g.mean);
    Ok(Analysis {
        cascades,
        binned,
        fit,
        gamma,
        duplicates_dropped: log.duplicates_dropped,
    })
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;

    use super::*;

    fn ev(id: &str, actor: &str, parent: Option<&str>, action: Action, t: i64) -> String {
        serde_json::to_string(&CascadeEvent {
            cascade_id: id.into(),
            actor: actor.into(),
            parent_actor: parent.map(Into::into),
            action,
            timestamp: t,
        })
        .unwrap()
    }

    fn parse(lines: &[String]) -> Result<CascadeLog> {
        parse_events(Cursor::new(lines.join("\n")))
    }

    #[test]
    fn create_and_two_views() {
        let log = parse(&[
            ev("a", "r", None, Action::Create, 0),
            ev("a", "x", Some("r"), Action::View, 5),
            ev("a", "y", Some("r"), Action::View, 3),
        ])
        .unwrap();
        assert_eq!(log.cascades.len(), 1);
        let evs = &log.cascades[0].events;
        assert_eq!(evs.len(), 3);
        assert_eq!(evs[1].actor, "y");
    }

    #[test]
    fn duplicate_view_dropped() {
        let log = parse(&[
            ev("a", "r", None, Action::Create, 0),
            ev("a", "x", Some("r"), Action::View, 1),
            ev("a", "x", Some("r"), Action::View, 2),
        ])
        .unwrap();
        assert_eq!(log.cascades[0].events.len(), 2);
        assert_eq!(log.duplicates_dropped, 1);
    }

    #[test]
    fn parent_must_share() {
        let err = parse(&[
            ev("a", "r", None, Action::Create, 0),
            ev("a", "x", Some("r"), Action::View, 1),
            ev("a", "y", Some("x"), Action::View, 2),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::Integrity { .. }), "{err}");
    }

    #[test]
    fn forward_needs_view() {
        assert!(parse(&[
            ev("a", "r", None, Action::Create, 0),
            ev("a", "x", Some("r"), Action::Forward, 1),
        ])
        .is_err());
    }

    #[test]
    fn multiple_creates_rejected() {
        assert!(parse(&[
            ev("a", "r", None, Action::Create, 0),
            ev("a", "s", None, Action::Create, 1),
        ])
        .is_err());
        assert!(parse(&[ev("a", "x", Some("r"), Action::View, 1)]).is_err());
    }

    #[test]
    fn malformed_line_reports_number() {
        let lines = vec![ev("a", "r", None, Action::Create, 0), "{not json".to_string()];
        match parse(&lines) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"cascade_id":"a","actor":"r","parent_actor":"q","action":"create","timestamp":0}"#;
        assert!(matches!(
            parse_events(Cursor::new(bad)),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn two_node_tree() {
        let log = parse(&[
            ev("a", "r", None, Action::Create, 0),
            ev("a", "x", Some("r"), Action::View, 10),
        ])
        .unwrap();
        let trees = to_cascade_trees(&log, None);
        let c = &trees[0].cascade;
        assert_eq!(c.size(), 2);
        assert_eq!(c.arrival_step, vec![0, 10]);
        assert_eq!(c.d_max_f, None);
    }

    #[test]
    fn gap_rule_truncates() {
        let log = parse(&[
            ev("a", "r", None, Action::Create, 0),
            ev("a", "x", Some("r"), Action::View, 2 * DAY_SECONDS),
        ])
        .unwrap();
        assert_eq!(to_cascade_trees(&log, Some(DAY_SECONDS))[0].cascade.size(), 1);
        assert_eq!(to_cascade_trees(&log, None)[0].cascade.size(), 2);
        let edge = parse(&[
            ev("a", "r", None, Action::Create, 0),
            ev("a", "x", Some("r"), Action::View, DAY_SECONDS),
        ])
        .unwrap();
        assert_eq!(to_cascade_trees(&edge, Some(DAY_SECONDS))[0].cascade.size(), 2);
    }

    #[test]
    fn forward_upgrades_role() {
        let log = parse(&[
            ev("a", "r", None, Action::Create, 0),
            ev("a", "x", Some("r"), Action::View, 1),
            ev("a", "x", Some("r"), Action::Forward, 1),
            ev("a", "y", Some("x"), Action::View, 2),
        ])
        .unwrap();
        let c = &to_cascade_trees(&log, None)[0].cascade;
        assert_eq!(c.roles, vec![Role::Creator, Role::Forwarder, Role::Viewer]);
        assert_eq!(c.tree.parents(), vec![0, 1]);
    }

    #[test]
    fn analyze_star_cascades() {
        // cascade "big": creator with 149 viewers; "small": creator alone
        let mut lines = vec![ev("big", "r", None, Action::Create, 0)];
        for i in 0..149 {
            lines.push(ev("big", &format!("v{i}"), Some("r"), Action::View, i + 1));
        }
        lines.push(ev("small", "s", None, Action::Create, 0));
        let a = analyze(&parse(&lines).unwrap(), None, 100, 10).unwrap();
        assert_eq!(a.cascades.len(), 2);
        assert_eq!(a.cascades[0].size, 150);
        let apl = a.cascades[0].avg_path_length.unwrap();
        assert!((apl - (2.0 - 2.0 / 150.0)).abs() < 1e-12);
        assert_eq!(a.cascades[1].avg_path_length, None);
        let b = a.binned.unwrap();
        assert_eq!(b.bins.len(), 1);
        assert_eq!(b.bins[0].count, 1);
        assert!(a.fit.is_none());
        assert_eq!(a.gamma, Some(0.0));
    }
}
