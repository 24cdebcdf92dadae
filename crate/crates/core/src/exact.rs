//! Exact branch-and-bound scheduler.
//!
//! Minimizes `T·C + L` and breaks ties by two lexicographic minimizations:
//! first the per-tag slot-index vector (tags in id order), then the per-tag
//! carrier vector. The result is unique, which makes it usable as a
//! supervised training label.
//!
//! Because `L ≤ T`, one carrier is worth more than any length difference, so
//! the optimum is the lexicographic minimum of `(C, L)`. The search deepens
//! over `L`; for each `L` it assigns tags (in id order) to slots as a
//! restricted-growth string, so slot permutations are never revisited and
//! the first assignment reaching a given cost is the lexicographically
//! smallest one. Within a slot the minimum carrier set only depends on the
//! set of querying hosts, and it never shrinks when a host is added, which
//! gives the pruning bound.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use crate::heuristic::solve_heuristic;
use crate::model::{Interrogation, NodeId, ProblemInstance, Schedule, Timeslot};
use crate::scheduler::{check_feasible, ScheduleError, Scheduler};

/// Hard ceiling from the bitmask representation.
pub const MAX_SUPPORTED_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverBudget {
    /// Instances with more nodes are refused outright.
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
    pub node_expansion_limit: Option<u64>,
    /// Branch-and-bound cost pruning. Never changes the result.
    pub pruning: bool,
}

impl Default for SolverBudget {
    fn default() -> Self {
        Self {
            max_nodes: 10,
            time_limit: Some(Duration::from_secs(60)),
            node_expansion_limit: None,
            pruning: true,
        }
    }
}

impl SolverBudget {
    pub fn unlimited() -> Self {
        Self {
            time_limit: None,
            ..Self::default()
        }
    }
}

pub fn solve_optimal(
    instance: &ProblemInstance,
    budget: &SolverBudget,
) -> Result<Schedule, ScheduleError> {
    let n = instance.node_count();
    let cap = budget.max_nodes.min(MAX_SUPPORTED_NODES);
    if n > cap {
        return Err(ScheduleError::TooLarge {
            nodes: n,
            max_nodes: cap,
        });
    }
    check_feasible(instance)?;
    let mut search = Search::new(instance, budget);
    search.run()
}

struct Exhausted;

struct Search<'a> {
    instance: &'a ProblemInstance,
    budget: &'a SolverBudget,
    started: Instant,
    expansions: u64,
    neighbor_mask: Vec<u64>,
    /// Host of each tag, tags in id order.
    hosts: Vec<NodeId>,
    min_carrier_memo: HashMap<u64, Option<u32>>,
    // per-L DFS state
    slot_hosts: Vec<u64>,
    slot_cost: Vec<u32>,
    assignment: Vec<usize>,
    best_assignment: Option<Vec<usize>>,
    /// Exclusive upper bound on C for the current L.
    bound: u32,
    /// Canonical optimum so far: (C, L, slot vector).
    best: Option<(u32, usize, Vec<usize>)>,
    heuristic: Schedule,
}

impl<'a> Search<'a> {
    fn new(instance: &'a ProblemInstance, budget: &'a SolverBudget) -> Self {
        let topology = instance.topology();
        let neighbor_mask = (0..instance.node_count())
            .map(|u| topology.neighbors(u).iter().fold(0u64, |m, &v| m | 1 << v))
            .collect();
        Self {
            instance,
            budget,
            started: Instant::now(),
            expansions: 0,
            neighbor_mask,
            hosts: instance.tags().iter().map(|t| t.host).collect(),
            min_carrier_memo: HashMap::new(),
            slot_hosts: Vec::new(),
            slot_cost: Vec::new(),
            assignment: Vec::new(),
            best_assignment: None,
            bound: 0,
            best: None,
            heuristic: solve_heuristic(instance).expect("feasibility checked"),
        }
    }

    fn tick(&mut self) -> Result<(), Exhausted> {
        self.expansions += 1;
        if let Some(limit) = self.budget.node_expansion_limit {
            if self.expansions > limit {
                return Err(Exhausted);
            }
        }
        if self.expansions % 1024 == 0 {
            if let Some(limit) = self.budget.time_limit {
                if self.started.elapsed() > limit {
                    return Err(Exhausted);
                }
            }
        }
        Ok(())
    }

    fn run(&mut self) -> Result<Schedule, ScheduleError> {
        let t = self.hosts.len();
        let heuristic_c = self.heuristic.carrier_count() as u32;
        let heuristic_l = self.heuristic.len();
        let mut per_host = HashMap::new();
        for &h in &self.hosts {
            *per_host.entry(h).or_insert(0usize) += 1;
        }
        let min_len = per_host.values().copied().max().unwrap_or(1);

        for len in min_len..=t {
            let c_limit = self.best.as_ref().map_or(heuristic_c, |b| b.0);
            if len as u32 > c_limit {
                break;
            }
            self.bound = match &self.best {
                Some(b) => b.0,
                None if len <= heuristic_l => heuristic_c + 1,
                None => heuristic_c,
            };
            self.slot_hosts = vec![0; len];
            self.slot_cost = vec![0; len];
            self.assignment.clear();
            self.best_assignment = None;
            if self.assign(0, 0, len).is_err() {
                return Err(self.timeout());
            }
            if let Some(found) = self.best_assignment.take() {
                self.best = Some((self.bound, len, found));
            }
        }
        let (_, len, slots) = self.best.clone().expect("heuristic bound is attainable");
        Ok(self.materialize(len, &slots))
    }

    fn timeout(&self) -> ScheduleError {
        let incumbent = match &self.best {
            Some((_, len, slots)) => self.materialize(*len, slots),
            None => self.heuristic.clone(),
        };
        ScheduleError::Timeout {
            expansions: self.expansions,
            incumbent: Some(incumbent),
        }
    }

    /// Assigns tag `i` onwards with `used` slots opened so far.
    fn assign(&mut self, i: usize, used: usize, len: usize) -> Result<(), Exhausted> {
        self.tick()?;
        let t = self.hosts.len();
        if i == t {
            if used == len {
                let total: u32 = self.slot_cost.iter().sum();
                if total < self.bound {
                    self.bound = total;
                    self.best_assignment = Some(self.assignment.clone());
                }
            }
            return Ok(());
        }
        if len - used > t - i {
            return Ok(());
        }
        let host_bit = 1u64 << self.hosts[i];
        let current: u32 = self.slot_cost[..used].iter().sum();
        for s in 0..(used + 1).min(len) {
            if self.slot_hosts[s] & host_bit != 0 {
                continue;
            }
            let mask = self.slot_hosts[s] | host_bit;
            let Some(cost) = self.min_carriers(mask) else {
                continue;
            };
            let now_used = used.max(s + 1);
            let lower = current - self.slot_cost[s] + cost + (len - now_used) as u32;
            if self.budget.pruning && lower >= self.bound {
                continue;
            }
            let (prev_mask, prev_cost) = (self.slot_hosts[s], self.slot_cost[s]);
            self.slot_hosts[s] = mask;
            self.slot_cost[s] = cost;
            self.assignment.push(s);
            let res = self.assign(i + 1, now_used, len);
            self.assignment.pop();
            self.slot_hosts[s] = prev_mask;
            self.slot_cost[s] = prev_cost;
            res?;
        }
        Ok(())
    }

    fn min_carriers(&mut self, host_mask: u64) -> Option<u32> {
        if let Some(&hit) = self.min_carrier_memo.get(&host_mask) {
            return hit;
        }
        let hosts: Vec<NodeId> = (0..64).filter(|&u| host_mask & 1 << u != 0).collect();
        let result = (1..=hosts.len())
            .find_map(|k| self.lexmin_carriers(&hosts, host_mask, k))
            .map(|carriers| {
                let mask = carriers.iter().fold(0u64, |m, &c| m | 1 << c);
                mask.count_ones()
            });
        self.min_carrier_memo.insert(host_mask, result);
        result
    }

    /// Lexicographically smallest carrier vector (one entry per host, in
    /// the given order) using at most `k` distinct carriers such that each
    /// host has exactly one carrier neighbor.
    fn lexmin_carriers(&self, hosts: &[NodeId], host_mask: u64, k: usize) -> Option<Vec<NodeId>> {
        let mut chosen = Vec::with_capacity(hosts.len());
        self.carrier_dfs(hosts, host_mask, k, 0, 0, 0, &mut chosen)
            .then_some(chosen)
    }

    #[allow(clippy::too_many_arguments)]
    fn carrier_dfs(
        &self,
        hosts: &[NodeId],
        host_mask: u64,
        k: usize,
        idx: usize,
        carriers: u64,
        done: u64,
        chosen: &mut Vec<NodeId>,
    ) -> bool {
        let Some(&h) = hosts.get(idx) else {
            return true;
        };
        let adjacent = carriers & self.neighbor_mask[h];
        match adjacent.count_ones() {
            0 => {}
            1 => {
                chosen.push(adjacent.trailing_zeros() as NodeId);
                if self.carrier_dfs(hosts, host_mask, k, idx + 1, carriers, done | 1 << h, chosen) {
                    return true;
                }
                chosen.pop();
                return false;
            }
            _ => return false,
        }
        if carriers.count_ones() as usize >= k {
            return false;
        }
        let mut options = self.neighbor_mask[h] & !host_mask;
        while options != 0 {
            let c = options.trailing_zeros() as NodeId;
            options &= options - 1;
            // a new carrier must not reach hosts that already have one
            if self.neighbor_mask[c] & done != 0 {
                continue;
            }
            chosen.push(c);
            if self.carrier_dfs(hosts, host_mask, k, idx + 1, carriers | 1 << c, done | 1 << h, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }

    fn materialize(&self, len: usize, slot_of_tag: &[usize]) -> Schedule {
        let tags = self.instance.tags();
        let n = self.instance.node_count();
        let slots = (0..len)
            .map(|s| {
                let members: Vec<usize> = (0..tags.len()).filter(|&i| slot_of_tag[i] == s).collect();
                let hosts: Vec<NodeId> = members.iter().map(|&i| tags[i].host).collect();
                let mask = hosts.iter().fold(0u64, |m, &h| m | 1 << h);
                let carriers = (1..=hosts.len())
                    .find_map(|k| self.lexmin_carriers(&hosts, mask, k))
                    .expect("slot was feasible during search");
                let records = members
                    .iter()
                    .zip(carriers)
                    .map(|(&i, carrier)| Interrogation {
                        host: tags[i].host,
                        tag: tags[i].id,
                        carrier,
                    })
                    .collect();
                Timeslot::from_interrogations(n, records)
            })
            .collect();
        Schedule::new(slots)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExactScheduler {
    pub budget: SolverBudget,
}

impl Scheduler for ExactScheduler {
    fn name(&self) -> &str {
        "optimal"
    }

    fn schedule(&self, instance: &ProblemInstance) -> Result<Schedule, ScheduleError> {
        solve_optimal(instance, &self.budget)
    }
}
