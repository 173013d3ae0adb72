//! Multi-user subcarrier assignment: per-subcarrier SINR and the greedy
//! sort-and-select pass that keeps, for every user, the least-interfered
//! slice of its allocation.
//!
//! Allocations are contiguous blocks of `per_user` subcarriers. The first
//! `n_subcarriers / per_user` users (the primaries) own disjoint blocks;
//! each further user is overlaid onto the block of its partner primary, so
//! no subcarrier ever hosts more than two users.

use crate::error::{Error, Result};
use crate::numerics::Complex64;

/// Who sits where, and who interferes with whom.
#[derive(Debug, Clone)]
pub struct InterferenceMap {
    n_subcarriers: usize,
    per_user: usize,
    /// Subcarrier block of each user (start index; length `per_user`).
    block_start: Vec<usize>,
    /// Interfering-user sets J_u.
    interferers: Vec<Vec<usize>>,
}

impl InterferenceMap {
    pub fn users(&self) -> usize {
        self.block_start.len()
    }

    pub fn per_user(&self) -> usize {
        self.per_user
    }

    /// Subcarriers allocated to `user`, in index order.
    pub fn allocation(&self, user: usize) -> std::ops::Range<usize> {
        let s = self.block_start[user];
        s..s + self.per_user
    }

    pub fn interferers(&self, user: usize) -> &[usize] {
        &self.interferers[user]
    }

    /// Number of users on each subcarrier.
    pub fn occupancy(&self) -> Vec<usize> {
        let mut occ = vec![0usize; self.n_subcarriers];
        for u in 0..self.users() {
            for k in self.allocation(u) {
                occ[k] += 1;
            }
        }
        occ
    }
}

/// Contiguous blocks for the primaries, pairwise overlay beyond that.
pub fn build_interference_map(
    users: usize,
    n_subcarriers: usize,
    per_user: usize,
) -> Result<InterferenceMap> {
    assert!(users >= 1 && per_user >= 1);
    let primaries = n_subcarriers / per_user;
    let capacity = 2 * primaries;
    if users > capacity {
        return Err(Error::TooManyUsers {
            users,
            capacity,
            subcarriers: n_subcarriers,
            per_user,
        });
    }
    let mut block_start = Vec::with_capacity(users);
    for u in 0..users {
        let primary = if u < primaries { u } else { u - primaries };
        block_start.push(primary * per_user);
    }
    let mut interferers = vec![Vec::new(); users];
    for u in primaries..users {
        let partner = u - primaries;
        interferers[partner].push(u);
        interferers[u].push(partner);
    }
    Ok(InterferenceMap {
        n_subcarriers,
        per_user,
        block_start,
        interferers,
    })
}

/// SINR of Eq-style form: P_u |H_u(k)|^2 over interference plus noise,
/// with equal power allocation and path loss absorbed in |H|^2.
pub fn sinr(
    user: usize,
    k: usize,
    map: &InterferenceMap,
    channels: &[Vec<Complex64>],
    tx_power: f64,
    noise_power: f64,
) -> f64 {
    assert!(noise_power > 0.0, "noise power must be positive");
    debug_assert!(map.allocation(user).contains(&k));
    let signal = tx_power * channels[user][k].norm_sqr();
    let mut interference = 0.0;
    for &j in map.interferers(user) {
        if map.allocation(j).contains(&k) {
            interference += tx_power * channels[j][k].norm_sqr();
        }
    }
    signal / (interference + noise_power)
}

/// Selection result: kept subcarriers and their SINRs, per user.
#[derive(Debug, Clone)]
pub struct AllocationState {
    pub map: InterferenceMap,
    /// For each user, the selected subcarriers in descending-SINR order.
    pub selected: Vec<Vec<usize>>,
    /// SINR of every allocated subcarrier, aligned with `allocation(u)`.
    pub sinr: Vec<Vec<f64>>,
}

impl AllocationState {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("user,subcarrier,sinr,selected\n");
        for u in 0..self.map.users() {
            for (off, k) in self.map.allocation(u).enumerate() {
                let sel = self.selected[u].contains(&k) as u8;
                out.push_str(&format!("{u},{k},{},{sel}\n", self.sinr[u][off]));
            }
        }
        out
    }
}

/// Evaluate every user's block, sort by SINR in descending order (ties to
/// the lower subcarrier index) and keep the best `n_select`.
pub fn select_subcarriers(
    map: &InterferenceMap,
    channels: &[Vec<Complex64>],
    tx_power: f64,
    noise_power: f64,
    n_select: usize,
) -> Result<AllocationState> {
    if n_select > map.per_user() {
        return Err(Error::SelectionTooLarge {
            want: n_select,
            have: map.per_user(),
        });
    }
    let mut selected = Vec::with_capacity(map.users());
    let mut sinr_all = Vec::with_capacity(map.users());
    for u in 0..map.users() {
        let values: Vec<f64> = map
            .allocation(u)
            .map(|k| sinr(u, k, map, channels, tx_power, noise_power))
            .collect();
        let mut order: Vec<usize> = map.allocation(u).collect();
        order.sort_by(|&a, &b| {
            let sa = values[a - map.block_start[u]];
            let sb = values[b - map.block_start[u]];
            sb.partial_cmp(&sa).unwrap().then(a.cmp(&b))
        });
        order.truncate(n_select);
        selected.push(order);
        sinr_all.push(values);
    }
    Ok(AllocationState {
        map: map.clone(),
        selected,
        sinr: sinr_all,
    })
}
