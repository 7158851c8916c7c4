//! Chain shadows: the set of points reachable from x by a chain whose first
//! hop passes near y.
//!
//! Concretely, z lies in the chain shadow of y seen from x when there is a
//! (C, 2C+1)-chain x_0 = x, ..., x_n = z with (x_0|x_1)_y <= C. The empty
//! chain (n = 0) is allowed, so x itself always belongs.
//!
//! On a tree the membership question has a closed form once y is far enough
//! from x. Write everything in coordinates based at x, let h = d(x, y),
//! l = d(x, z), and let g be the length of the common prefix of y and z.
//! For h >= 3C+1:
//!
//!   z in shadow  <=>  z = x,  or  g >= h - C,  or  (g >= h - 2C and l >= g + C + 1).
//!
//! The second clause is the straight route: a single hop landing on z, whose
//! anchor condition (x|z)_y = h - g <= C is exactly g >= h - C. The third is
//! the dog-leg: a first hop along y to depth g + C, then a turn of size
//! exactly C down the branch holding z. Conversely, any chain ending at z
//! bends at most C at each point, and the endpoint-in-sight consequence
//! (x|z)_{x_1} <= C pins the whole route inside those two shapes; the
//! dog-leg's length constraint l >= g + C + 1 comes from the second hop
//! being at least 2C+1 long. For h <= 3C the short-range interactions are
//! messier and membership is decided by the bounded search instead.
//!
//! `chain_shadow_search` is the reference implementation: an explicit
//! breadth-first search over all chains, kept honest by two confinement
//! facts proved by the reversed-chain consequence. First, along any chain
//! from x the distance d(x, x_i) grows by at least 1 per hop. Second, every
//! point v of a chain ending at z satisfies (x|z)_v <= C, which on a tree
//! confines v to a corridor: v is a prefix of z followed by at most C extra
//! letters branching off the route to z, or an extension of z by at most C
//! letters. The search therefore enumerates the corridor and never misses a
//! chain. It is meant for cross-checking the closed form, not for speed.

use std::collections::{HashSet, VecDeque};

use free_group::{word_gromov, ReducedWord};

use crate::error::PivotalError;

fn same_group(x: &ReducedWord, y: &ReducedWord, z: &ReducedWord) -> Result<(), PivotalError> {
    if x.group() != y.group() || x.group() != z.group() {
        return Err(PivotalError::Invalid(
            "shadow arguments come from different groups".into(),
        ));
    }
    Ok(())
}

/// Decides membership of z in the chain shadow of y seen from x, with
/// turning constant c. Uses the tree closed form when d(x, y) >= 3c+1 and
/// the exhaustive search otherwise.
pub fn chain_shadow_contains(
    x: &ReducedWord,
    y: &ReducedWord,
    c: u64,
    z: &ReducedWord,
) -> Result<bool, PivotalError> {
    same_group(x, y, z)?;
    let xi = x.inverse();
    let y0 = xi.mul(y)?;
    let z0 = xi.mul(z)?;
    if z0.is_identity() {
        return Ok(true);
    }
    let h = y0.len() as u64;
    if h >= 3 * c + 1 {
        let g = y0.common_prefix_len(&z0) as u64;
        let l = z0.len() as u64;
        Ok(g + c >= h || (g + 2 * c >= h && l >= g + c + 1))
    } else {
        search_from_origin(&y0, c, &z0)
    }
}

/// Reference decision by exhaustive chain search. Exact for any inputs, but
/// cost grows with d(x, z), so keep z modest.
pub fn chain_shadow_search(
    x: &ReducedWord,
    y: &ReducedWord,
    c: u64,
    z: &ReducedWord,
) -> Result<bool, PivotalError> {
    same_group(x, y, z)?;
    let xi = x.inverse();
    let y0 = xi.mul(y)?;
    let z0 = xi.mul(z)?;
    if z0.is_identity() {
        return Ok(true);
    }
    search_from_origin(&y0, c, &z0)
}

/// All words within the corridor around the route from the origin to z:
/// a prefix of z, then at most `c` further letters that do not continue
/// along z. Includes the origin and z itself, and extensions past z's end.
fn corridor(z: &ReducedWord, c: u64) -> Vec<ReducedWord> {
    let zl = z.letters();
    let mut out = Vec::new();
    for t in 0..=zl.len() {
        let stem = z.prefix(t);
        let next_along = zl.get(t).copied();
        grow(&stem, next_along, c, &mut out);
    }
    out
}

/// Depth-first extension of `stem` by up to `budget` letters, avoiding both
/// cancellation and (at the first letter only) the continuation `banned`.
fn grow(stem: &ReducedWord, banned: Option<i8>, budget: u64, out: &mut Vec<ReducedWord>) {
    out.push(stem.clone());
    if budget == 0 {
        return;
    }
    let group = stem.group();
    for letter in group.letters() {
        if Some(-letter) == stem.last() || Some(letter) == banned {
            continue;
        }
        let mut next = stem.clone();
        next.push_letter(letter);
        grow(&next, None, budget - 1, out);
    }
}

fn search_from_origin(y: &ReducedWord, c: u64, z: &ReducedWord) -> Result<bool, PivotalError> {
    let group = z.group();
    let o = ReducedWord::identity(group);
    let hop = 2 * c + 1;
    let candidates = corridor(z, c);

    let turn = |a: &ReducedWord, b: &ReducedWord, at: &ReducedWord| -> u64 {
        word_gromov(a, b, at).expect("corridor words share one group") as u64
    };
    let dist = |a: &ReducedWord, b: &ReducedWord| -> u64 {
        a.distance(b).expect("corridor words share one group") as u64
    };

    // States are (previous, current) index pairs; usize::MAX stands for the
    // origin as the previous point of an initial one-hop state.
    let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    for (i, v) in candidates.iter().enumerate() {
        if (v.len() as u64) < hop || turn(&o, v, y) > c {
            continue;
        }
        if v == z {
            return Ok(true);
        }
        if seen.insert((usize::MAX, i)) {
            queue.push_back((usize::MAX, i));
        }
    }

    while let Some((pi, ci)) = queue.pop_front() {
        let prev = if pi == usize::MAX { &o } else { &candidates[pi] };
        let cur = &candidates[ci];
        for (ni, next) in candidates.iter().enumerate() {
            // Distance from the start grows along any chain, so equal or
            // shorter candidates can never be the next point.
            if next.len() <= cur.len() {
                continue;
            }
            if dist(cur, next) < hop || turn(prev, next, cur) > c {
                continue;
            }
            if next == z {
                return Ok(true);
            }
            if seen.insert((ci, ni)) {
                queue.push_back((ci, ni));
            }
        }
    }
    Ok(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use free_group::FreeGroupSpec;

    fn f2() -> FreeGroupSpec {
        FreeGroupSpec::new(2).unwrap()
    }

    fn w(letters: &[i8]) -> ReducedWord {
        ReducedWord::from_letters(f2(), letters.to_vec()).unwrap()
    }

    fn all_words(max_len: usize) -> Vec<ReducedWord> {
        let mut out = vec![ReducedWord::identity(f2())];
        let mut frontier = vec![ReducedWord::identity(f2())];
        for _ in 0..max_len {
            let mut next_frontier = Vec::new();
            for word in &frontier {
                for letter in f2().letters() {
                    if Some(-letter) == word.last() {
                        continue;
                    }
                    let mut next = word.clone();
                    next.push_letter(letter);
                    out.push(next.clone());
                    next_frontier.push(next);
                }
            }
            frontier = next_frontier;
        }
        out
    }

    #[test]
    fn base_point_is_always_a_member() {
        let x = w(&[2, -1, 2]);
        let y = w(&[1, 1, 1]);
        assert!(chain_shadow_contains(&x, &y, 1, &x).unwrap());
        assert!(chain_shadow_search(&x, &y, 1, &x).unwrap());
    }

    #[test]
    fn aligned_target_is_in_and_opposite_is_out() {
        let o = ReducedWord::identity(f2());
        let y = w(&[1; 5]);
        let along = w(&[1; 9]);
        let opposite = w(&[-1; 9]);
        assert!(chain_shadow_contains(&o, &y, 1, &along).unwrap());
        assert!(!chain_shadow_contains(&o, &y, 1, &opposite).unwrap());
    }

    #[test]
    fn zero_turning_shadow_is_prefix_extension() {
        // With c = 0 a chain can never bend, so the shadow of y is exactly
        // y's extensions, plus the base point.
        let o = ReducedWord::identity(f2());
        let y = w(&[1, 2, -1]);
        for z in all_words(6) {
            let expect = z.is_identity() || y.is_prefix_of(&z);
            assert_eq!(chain_shadow_contains(&o, &y, 0, &z).unwrap(), expect);
            assert_eq!(chain_shadow_search(&o, &y, 0, &z).unwrap(), expect);
        }
    }

    #[test]
    fn shadow_of_base_itself_is_everything_far_enough() {
        // y = x makes the anchor condition vacuous: membership only asks for
        // a chain, so the shadow is the base point plus everything at
        // distance at least 2c+1.
        let o = ReducedWord::identity(f2());
        for c in 0..3u64 {
            for z in all_words(6) {
                let expect = z.is_identity() || z.len() as u64 >= 2 * c + 1;
                assert_eq!(chain_shadow_contains(&o, &o, c, &z).unwrap(), expect, "c={c}");
                assert_eq!(chain_shadow_search(&o, &o, c, &z).unwrap(), expect, "c={c}");
            }
        }
    }

    #[test]
    fn dog_leg_needs_room_past_the_turn() {
        // c = 1, y = aaaa: a branch leaving y at depth 2 bends the full 2c
        // allowance, so it must run at least c+1 = 2 letters past the split.
        let o = ReducedWord::identity(f2());
        let y = w(&[1, 1, 1, 1]);
        assert!(chain_shadow_contains(&o, &y, 1, &w(&[1, 1, 2, 2])).unwrap());
        assert!(chain_shadow_search(&o, &y, 1, &w(&[1, 1, 2, 2])).unwrap());
        assert!(!chain_shadow_contains(&o, &y, 1, &w(&[1, 1, 2])).unwrap());
        assert!(!chain_shadow_search(&o, &y, 1, &w(&[1, 1, 2])).unwrap());
        // Leaving at depth 3 satisfies the straight clause g >= h - c, so no
        // extra length is needed.
        assert!(chain_shadow_contains(&o, &y, 1, &w(&[1, 1, 1, 2])).unwrap());
        // Leaving at depth 1 bends too much for c = 1 no matter the length.
        assert!(!chain_shadow_contains(&o, &y, 1, &w(&[1, 2, 2, 2, 2, 2])).unwrap());
        assert!(!chain_shadow_search(&o, &y, 1, &w(&[1, 2, 2, 2, 2, 2])).unwrap());
    }

    #[test]
    fn closed_form_matches_search_exhaustively() {
        let o = ReducedWord::identity(f2());
        let ys = [
            w(&[1]),
            w(&[1, 2, 2, -1]),
            w(&[2, 2, 2, 2, 1, 1]),
            w(&[-2, 1, -2, 1]),
            w(&[1, -2, 1, 1, 2, 2, 1]),
        ];
        for c in 0..3u64 {
            for y in &ys {
                if (y.len() as u64) < 3 * c + 1 {
                    continue;
                }
                for z in all_words(6) {
                    assert_eq!(
                        chain_shadow_contains(&o, y, c, &z).unwrap(),
                        chain_shadow_search(&o, y, c, &z).unwrap(),
                        "c={c} y={:?} z={:?}",
                        y.letters(),
                        z.letters()
                    );
                }
            }
        }
    }

    #[test]
    fn membership_is_translation_invariant() {
        let x = w(&[2, -1, -1, 2]);
        let y0 = w(&[1, 2, 1, 1]);
        let z0 = w(&[1, 2, 2, 2]);
        let y = x.mul(&y0).unwrap();
        let z = x.mul(&z0).unwrap();
        let o = ReducedWord::identity(f2());
        for c in 0..3u64 {
            assert_eq!(
                chain_shadow_contains(&x, &y, c, &z).unwrap(),
                chain_shadow_contains(&o, &y0, c, &z0).unwrap()
            );
        }
    }

    #[test]
    fn mismatched_groups_are_rejected() {
        let o2 = ReducedWord::identity(f2());
        let o3 = ReducedWord::identity(FreeGroupSpec::new(3).unwrap());
        assert!(matches!(
            chain_shadow_contains(&o2, &o2, 1, &o3),
            Err(PivotalError::Invalid(_))
        ));
    }
}
