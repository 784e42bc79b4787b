//! Story generation.
//!
//! Timesteps are filled in ascending order. Every MoveAt and CrossPaths spec
//! becomes a requirement that stays *pending* while there is still slack,
//! and is *committed* once the free slots left before its deadline drop to
//! the worst-case number of moves it could need. Committing reserves
//! concrete slots for the required moves and freezes the involved
//! characters until the deadline; committing a requirement first commits
//! every pending one with an earlier deadline. All remaining slots are
//! filler.
//!
//! Random draws come from the `Events` stream of the story seed, in this
//! order, for t = 1..=horizon:
//!
//! 1. for each CrossPaths requirement committed at t (deadline order), one
//!    shuffle of its member list, which fixes the arrival order;
//! 2. if t is a filler slot, one index into the characters that have a
//!    legal move (board order), then one index into that character's legal
//!    destinations (vertex order). When no character has one, a frozen
//!    character may take a detour that keeps its next claimed move legal;
//!    the two indices are then drawn over those detours instead.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Event, Story};
use crate::seed::{rng, Seed, Stream};
use crate::storyboard::{validate_storyboard, EventSpec, GraphIndex, Storyboard, ValidationReport};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimulateError {
    #[error("storyboard is invalid:\n{0}")]
    InvalidBoard(ValidationReport),
    #[error("unsatisfiable at t={t}: {reason}")]
    Unsatisfiable { t: u32, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Cross,
    Move,
}

#[derive(Debug)]
struct Requirement {
    kind: Kind,
    members: Vec<usize>,
    location: usize,
    deadline: u32,
    /// Most moves any single member could need, from any vertex.
    worst_each: usize,
    committed: bool,
}

struct Planner<'a> {
    board: &'a Storyboard,
    graph: GraphIndex,
    horizon: u32,
    rng: ChaCha8Rng,
    reqs: Vec<Requirement>,
    /// `dist_to[l][v]`: hops from v to l.
    dist_to: Vec<Vec<Option<usize>>>,
    /// `pre_to[l][v]`: hops from v to some vertex with an edge into l.
    pre_to: Vec<Vec<Option<usize>>>,
    /// `protected[t][c]`
    protected: Vec<Vec<bool>>,
    /// Requirement owning each pinned slot.
    pinned_by: Vec<Option<usize>>,
    claimed: Vec<Option<(usize, usize)>>,
    pos: Vec<usize>,
    /// Position after every claimed move, and the slot of the last one.
    projected: Vec<usize>,
    last_claim: Vec<u32>,
    frozen_until: Vec<u32>,
}

/// Generates a story that honors every spec of `sb`.
pub fn simulate(sb: &Storyboard, seed: Seed) -> Result<Story, SimulateError> {
    let report = validate_storyboard(sb);
    if !report.is_valid() {
        return Err(SimulateError::InvalidBoard(report));
    }
    let mut planner = Planner::new(sb, seed);
    let mut events = Vec::with_capacity(sb.horizon as usize);
    for t in 1..=sb.horizon {
        planner.commit_due(t)?;
        let (c, dest) = match planner.claimed[t as usize] {
            Some((c, dest)) => {
                let from = planner.pos[c];
                if from == dest || !planner.graph.has_edge(from, dest) {
                    return Err(unsat(t, format!(
                        "planned move of `{}` is not legal",
                        sb.characters[c]
                    )));
                }
                (c, dest)
            }
            None => planner.filler(t)?,
        };
        planner.pos[c] = dest;
        let location = planner.graph.name(dest).clone();
        events.push(Event {
            t,
            actor: sb.characters[c].clone(),
            action: sb.environment.action_for(sb.entity_kind, &location),
            location,
        });
        planner.check_deadlines(t)?;
    }
    Ok(Story::new(sb.clone(), seed, events).expect("planner only emits board members"))
}

fn unsat(t: u32, reason: impl Into<String>) -> SimulateError {
    SimulateError::Unsatisfiable {
        t,
        reason: reason.into(),
    }
}

impl<'a> Planner<'a> {
    fn new(board: &'a Storyboard, seed: Seed) -> Self {
        let graph = GraphIndex::new(&board.graph).expect("validated graph");
        let nv = graph.len();
        let nc = board.characters.len();
        let n = board.horizon as usize;

        let dist_to: Vec<Vec<Option<usize>>> = (0..nv)
            .map(|l| (0..nv).map(|v| graph.distance(v, l)).collect())
            .collect();
        let pre_to: Vec<Vec<Option<usize>>> = (0..nv)
            .map(|l| (0..nv).map(|v| graph.pre_hops(v, l)).collect())
            .collect();

        let mut protected = vec![vec![false; nc]; n + 1];
        for spec in &board.event_specs {
            if let EventSpec::ExclusiveRandom {
                protected: cs,
                t_start,
                t_end,
            } = spec
            {
                for t in *t_start..=*t_end {
                    for c in cs {
                        protected[t as usize][board.character_index(c).expect("validated")] = true;
                    }
                }
            }
        }

        let char_ix = |c| board.character_index(c).expect("validated");
        let mut reqs: Vec<Requirement> = board
            .event_specs
            .iter()
            .filter_map(|spec| {
                let (kind, members, location, t) = match spec {
                    EventSpec::MoveAt {
                        character,
                        location,
                        t,
                    } => (Kind::Move, vec![char_ix(character)], location, *t),
                    EventSpec::CrossPaths {
                        characters,
                        location,
                        t,
                    } => (Kind::Cross, characters.iter().map(char_ix).collect(), location, *t),
                    EventSpec::ExclusiveRandom { .. } => return None,
                };
                let l = graph.index(location).expect("validated");
                let table = if kind == Kind::Cross { &dist_to[l] } else { &pre_to[l] };
                let worst_each = table.iter().flatten().copied().max().unwrap_or(0);
                Some(Requirement {
                    kind,
                    members,
                    location: l,
                    deadline: t,
                    worst_each,
                    committed: false,
                })
            })
            .collect();
        reqs.sort_by_key(|r| r.deadline);

        let mut pinned_by = vec![None; n + 1];
        for (i, r) in reqs.iter().enumerate() {
            pinned_by[r.deadline as usize] = Some(i);
        }

        let start = graph.start();
        Self {
            board,
            graph,
            horizon: board.horizon,
            rng: rng(seed, Stream::Events),
            reqs,
            dist_to,
            pre_to,
            protected,
            pinned_by,
            claimed: vec![None; n + 1],
            pos: vec![start; nc],
            projected: vec![start; nc],
            last_claim: vec![0; nc],
            frozen_until: vec![0; nc],
        }
    }

    /// Slot `s` may host a move for requirement `r`: not taken, and not the
    /// pinned slot of some other requirement.
    fn slot_open(&self, s: u32, r: usize) -> bool {
        let s = s as usize;
        self.claimed[s].is_none() && self.pinned_by[s].is_none_or(|owner| owner == r)
    }

    /// Last slot usable for moves that lead up to requirement `r`.
    fn last_hop_slot(&self, r: usize) -> u32 {
        let req = &self.reqs[r];
        match req.kind {
            Kind::Cross => req.deadline,
            Kind::Move => req.deadline - 1,
        }
    }

    fn is_due(&self, r: usize, t: u32) -> bool {
        let req = &self.reqs[r];
        if t >= req.deadline {
            return true;
        }
        let hi = self.last_hop_slot(r);
        let mut union_free = 0;
        let mut member_free = vec![0usize; req.members.len()];
        for s in t..=hi {
            if !self.slot_open(s, r) {
                continue;
            }
            let mut any = false;
            for (k, &m) in req.members.iter().enumerate() {
                if s > self.last_claim[m] && !self.protected[s as usize][m] {
                    member_free[k] += 1;
                    any = true;
                }
            }
            union_free += usize::from(any);
        }
        let worst_total = req.worst_each * req.members.len();
        union_free <= worst_total || member_free.iter().any(|&f| f <= req.worst_each)
    }

    fn commit_due(&mut self, t: u32) -> Result<(), SimulateError> {
        loop {
            let due = (0..self.reqs.len()).find(|&r| !self.reqs[r].committed && self.is_due(r, t));
            let Some(due) = due else { return Ok(()) };
            for r in 0..=due {
                if !self.reqs[r].committed {
                    self.commit(r, t)?;
                }
            }
        }
    }

    fn commit(&mut self, r: usize, t: u32) -> Result<(), SimulateError> {
        let (kind, location, deadline) = {
            let req = &self.reqs[r];
            (req.kind, req.location, req.deadline)
        };
        let mut members = self.reqs[r].members.clone();
        if kind == Kind::Cross {
            members.shuffle(&mut self.rng);
        }
        let name = |c: usize| self.board.characters[c].clone();

        let mut paths = Vec::with_capacity(members.len());
        for &m in &members {
            // pending claimed moves decide where m will be; otherwise it is
            // wherever filler left it
            let from = if self.last_claim[m] >= t { self.projected[m] } else { self.pos[m] };
            let path = match kind {
                Kind::Cross => self.graph.shortest_path(from, location),
                Kind::Move => self.graph.path_to_predecessor(from, location),
            };
            let path = path.ok_or_else(|| {
                unsat(deadline, format!(
                    "`{}` cannot reach `{}`",
                    name(m),
                    self.graph.name(location)
                ))
            })?;
            paths.push(path);
        }

        // fill slots backwards from the last usable one
        let hi = self.last_hop_slot(r);
        let mut remaining: Vec<usize> = paths.iter().map(Vec::len).collect();
        let mut assigned = vec![0usize; members.len()];
        let mut next_hi = vec![hi; members.len()];
        let mut s = hi;
        while s >= t && remaining.iter().any(|&h| h > 0) {
            if self.slot_open(s, r) {
                let pick = (0..members.len())
                    .filter(|&k| {
                        let m = members[k];
                        remaining[k] > 0
                            && s <= next_hi[k]
                            && s > self.last_claim[m]
                            && !self.protected[s as usize][m]
                    })
                    .min_by_key(|&k| (assigned[k], k));
                if let Some(k) = pick {
                    remaining[k] -= 1;
                    assigned[k] += 1;
                    next_hi[k] = s - 1;
                    self.claimed[s as usize] = Some((members[k], paths[k][remaining[k]]));
                }
            }
            if s == 0 {
                break;
            }
            s -= 1;
        }
        if let Some(k) = remaining.iter().position(|&h| h > 0) {
            return Err(unsat(deadline, format!(
                "no free timesteps for `{}` to reach `{}` by t={deadline}",
                name(members[k]),
                self.graph.name(location)
            )));
        }

        if kind == Kind::Move {
            self.claimed[deadline as usize] = Some((members[0], location));
        }
        for (k, &m) in members.iter().enumerate() {
            if let Some(&last) = paths[k].last() {
                self.projected[m] = last;
            }
            if kind == Kind::Move {
                self.projected[m] = location;
            }
            let last_slot = match kind {
                Kind::Move => deadline,
                Kind::Cross if assigned[k] > 0 => {
                    // the final hop sits in the highest slot given to this member
                    (t..=hi)
                        .rev()
                        .find(|&s| self.claimed[s as usize].is_some_and(|(c, _)| c == m))
                        .unwrap_or(self.last_claim[m])
                }
                Kind::Cross => self.last_claim[m],
            };
            self.last_claim[m] = self.last_claim[m].max(last_slot);
            self.frozen_until[m] = self.frozen_until[m].max(deadline);
        }
        self.reqs[r].committed = true;
        Ok(())
    }

    /// Would moving `c` to `dest` break a pending requirement? Either by
    /// bringing an unrealized crossing group together early, or by leaving
    /// `c` unable to reach a required location.
    fn destination_allowed(&self, c: usize, dest: usize) -> bool {
        self.reqs.iter().filter(|r| !r.committed && r.members.contains(&c)).all(|r| {
            let reachable = match r.kind {
                Kind::Cross => self.dist_to[r.location][dest].is_some(),
                Kind::Move => self.pre_to[r.location][dest].is_some(),
            };
            let meets = r.kind == Kind::Cross
                && r.members.iter().all(|&o| o == c || self.pos[o] == dest);
            reachable && !meets
        })
    }

    fn filler(&mut self, t: u32) -> Result<(usize, usize), SimulateError> {
        let mut options: Vec<(usize, Vec<usize>)> = Vec::new();
        for c in 0..self.board.characters.len() {
            if self.protected[t as usize][c] || self.frozen_until[c] >= t {
                continue;
            }
            let dests: Vec<usize> = self
                .graph
                .out(self.pos[c])
                .iter()
                .copied()
                .filter(|&d| self.destination_allowed(c, d))
                .collect();
            if !dests.is_empty() {
                options.push((c, dests));
            }
        }
        if options.is_empty() {
            options = self.detours(t);
        }
        if options.is_empty() {
            return Err(unsat(t, "no character may move at this timestep"));
        }
        let (c, dests) = &options[self.rng.gen_range(0..options.len())];
        let dest = dests[self.rng.gen_range(0..dests.len())];
        Ok((*c, dest))
    }

    /// Moves for frozen characters that still leave their next claimed
    /// hop legal, come before every crossing they still have to attend,
    /// and do not complete a crossing early.
    fn detours(&self, t: u32) -> Vec<(usize, Vec<usize>)> {
        let mut options = Vec::new();
        for c in 0..self.board.characters.len() {
            if self.protected[t as usize][c] {
                continue;
            }
            let next = ((t + 1)..=self.horizon).find_map(|s| match self.claimed[s as usize] {
                Some((m, to)) if m == c => Some((s, to)),
                _ => None,
            });
            let Some((slot, next)) = next else { continue };
            let crossing_first = self
                .reqs
                .iter()
                .any(|r| r.kind == Kind::Cross && r.deadline > t && r.deadline < slot && r.members.contains(&c));
            if crossing_first {
                continue;
            }
            let dests: Vec<usize> = self
                .graph
                .out(self.pos[c])
                .iter()
                .copied()
                .filter(|&d| d != next && self.graph.has_edge(d, next))
                .filter(|&d| {
                    !self.reqs.iter().any(|r| {
                        r.kind == Kind::Cross
                            && r.deadline > t
                            && r.members.contains(&c)
                            && r.members.iter().all(|&o| o == c || self.pos[o] == d)
                    })
                })
                .collect();
            if !dests.is_empty() {
                options.push((c, dests));
            }
        }
        options
    }

    fn check_deadlines(&self, t: u32) -> Result<(), SimulateError> {
        let Some(r) = self.pinned_by[t as usize] else { return Ok(()) };
        let req = &self.reqs[r];
        if req.kind == Kind::Cross {
            if let Some(&m) = req.members.iter().find(|&&m| self.pos[m] != req.location) {
                return Err(unsat(t, format!(
                    "`{}` is not at `{}`",
                    self.board.characters[m],
                    self.graph.name(req.location)
                )));
            }
        }
        debug_assert!(t <= self.horizon);
        Ok(())
    }
}
