use super::ClusterConfig;
use crate::san::{Marking, PlaceId, SanBuilder, SanError};
use crate::Scalar;

/// Places shared between the response, failure and recovery submodels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterPlaces {
    pub leader_up: PlaceId,
    pub followers_up: PlaceId,
    /// Members holding a role, `LeaderUp + FollowersUp`.
    pub nodes_up: PlaceId,
    pub down_hardware: PlaceId,
    pub down_process: PlaceId,
    pub down_bundle: PlaceId,
    pub counter_failures: PlaceId,
    pub init_election_pool: PlaceId,
    pub announce_candidate: PlaceId,
    pub candidate_waiting: PlaceId,
    pub announce_follower: PlaceId,
    pub node_down_select: PlaceId,
    pub c: u32,
}

impl ClusterPlaces {
    pub fn declare<T: Scalar>(
        b: &mut SanBuilder<T>,
        cfg: &ClusterConfig,
    ) -> Result<Self, SanError> {
        Ok(ClusterPlaces {
            leader_up: b.place("LeaderUp", 1)?,
            followers_up: b.place("FollowersUp", cfg.c - 1)?,
            nodes_up: b.place("NodesUp", cfg.c)?,
            down_hardware: b.place("NodesDownHardware", 0)?,
            down_process: b.place("NodesDownProcess", 0)?,
            down_bundle: b.place("NodesDownBundle", 0)?,
            counter_failures: b.place("CounterFailures", 0)?,
            init_election_pool: b.place("InitElectionPool", 0)?,
            announce_candidate: b.place("AnnounceCandidateRole", 0)?,
            candidate_waiting: b.place("CandidateWaiting", 0)?,
            announce_follower: b.place("AnnounceFollowerRole", 0)?,
            node_down_select: b.place("NodeDownSelectFailure", 0)?,
            c: cfg.c,
        })
    }

    pub fn downs(&self, m: &Marking) -> u32 {
        m.get(self.down_hardware) + m.get(self.down_process) + m.get(self.down_bundle)
    }

    /// Nodes whose software is running, whatever their role.
    pub fn live(&self, m: &Marking) -> u32 {
        self.c - self.downs(m)
    }

    /// Running nodes that are still rejoining the cluster.
    pub fn rejoining(&self, m: &Marking) -> u32 {
        m.get(self.init_election_pool)
            + m.get(self.announce_candidate)
            + m.get(self.candidate_waiting)
            + m.get(self.announce_follower)
    }

    /// Leader up and at least `⌊C/2⌋` followers up.
    pub fn leader_and_majority_up(&self, m: &Marking) -> bool {
        m.get(self.leader_up) == 1 && m.get(self.followers_up) >= self.c / 2
    }
}
