//! Full-episode simulation with every agent following a fixed policy.

use crate::posg::{sample_categorical, Action, AgentId, Joint, Posg, Rng};

use super::{Dist, Policy};

/// Play one episode of at most `horizon` steps with agent `k` following
/// `seats[k]`. `on_step(t, memories)` is called before each joint action.
/// Returns the joint reward of every step taken.
pub fn play_episode<E: Posg>(
    env: &E,
    seats: &[&dyn Policy<E::Memory>],
    horizon: usize,
    rng: &mut Rng,
    mut on_step: impl FnMut(usize, &[E::Memory]),
) -> Vec<Joint<f64>> {
    let mut s = env.sample_initial_state(rng);
    let obs = env.sample_initial_obs(&s, rng);
    let mut mems: Vec<E::Memory> = (0..seats.len()).map(|k| env.initial_memory(AgentId(k), &obs[k])).collect();
    let mut rewards = Vec::new();
    let mut dist = Dist::new();
    let mut actions: Joint<Action> = Joint::new();
    for t in 0..horizon {
        if env.is_terminal(&s) {
            break;
        }
        on_step(t, &mems);
        actions.clear();
        for (pi, m) in seats.iter().zip(&mems) {
            dist.clear();
            dist.resize(pi.action_count(), 0.0);
            pi.action_dist(m, &mut dist);
            actions.push(sample_categorical(&dist, rng));
        }
        let out = env.sample_step(&s, &actions, rng);
        for (k, m) in mems.iter_mut().enumerate() {
            env.update_memory(AgentId(k), m, actions[k], &out.joint_obs[k]);
        }
        rewards.push(out.joint_reward);
        s = out.next_state;
    }
    rewards
}

/// Discounted return of one agent from a reward trace.
pub fn agent_return(rewards: &[Joint<f64>], agent: AgentId, gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r[agent.0] + gamma * acc)
}
