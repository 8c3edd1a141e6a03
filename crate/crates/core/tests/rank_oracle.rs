//! Rank machinery checked against an independent brute-force evaluator that
//! enumerates every cut system straight from the definition.

use creatures_core::extnat::DEFAULT_BIT_BUDGET;
use creatures_core::rank::{pigeonhole_index, project, RankCtx, RankParams};
use creatures_core::schedule::Flarge;
use num_bigint::BigUint;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

struct Brute {
    bigness: u64,
    /// flarge(arg) for small args, None when it exceeds u64.
    flarge: Vec<Option<u64>>,
    level: u64,
    memo: HashMap<(u64, u64), bool>,
}

impl Brute {
    fn new(bigness: u64, level: u64, schedule: Flarge) -> Brute {
        let flarge = (0..80u64)
            .map(|arg| {
                schedule
                    .eval(&BigUint::from(arg), 64)
                    .and_then(|v| u64::try_from(v).ok())
            })
            .collect();
        Brute {
            bigness,
            flarge,
            level,
            memo: HashMap::new(),
        }
    }

    /// ns(u) >= k, by enumerating all cut position sets. Bit `i` of a cut set
    /// stands for a cut at position `i + 1`.
    fn ge(&mut self, u: u64, k: u64) -> bool {
        if k == 0 {
            return true;
        }
        if k == 1 {
            return u != 0;
        }
        if let Some(&v) = self.memo.get(&(u, k)) {
            return v;
        }
        let max_el = 63 - u.leading_zeros() as u64;
        let n = max_el + 1;
        let mut ok = false;
        'sets: for bits in 1u64..(1u64 << n) {
            let m = u64::from(bits.count_ones());
            if m < self.bigness {
                continue;
            }
            let first = u64::from(bits.trailing_zeros()) + 1;
            match self.flarge[(first + self.level) as usize] {
                Some(v) if m >= v => {}
                _ => continue,
            }
            let mut lo = 0u64;
            let mut rem = bits;
            while rem != 0 {
                let hi = u64::from(rem.trailing_zeros()) + 1;
                rem &= rem - 1;
                let blk = block(u, lo, hi);
                if blk == 0 || !self.ge(blk, k - 1) {
                    continue 'sets;
                }
                lo = hi;
            }
            ok = true;
            break;
        }
        self.memo.insert((u, k), ok);
        ok
    }

    fn ns(&mut self, u: u64) -> u64 {
        let mut k = 0;
        while self.ge(u, k + 1) {
            k += 1;
        }
        k
    }
}

fn block(u: u64, lo: u64, hi: u64) -> u64 {
    let below = |b: u64| if b >= 64 { u64::MAX } else { (1u64 << b) - 1 };
    u & below(hi) & !below(lo)
}

fn toy_schedules() -> Vec<Flarge> {
    vec![
        Flarge::Default,
        Flarge::const_of(2).unwrap(),
        Flarge::const_of(3).unwrap(),
        Flarge::table(vec![2, 2, 2, 2, 1000], 2).unwrap(),
        Flarge::table(vec![4, 2], 2).unwrap(),
    ]
}

fn ctx(bigness: u64, level: u64, schedule: Flarge) -> RankCtx {
    RankCtx::new(
        RankParams::new(bigness, level, Ratio::new(1, 1), schedule).unwrap(),
        DEFAULT_BIT_BUDGET,
    )
}

#[test]
fn greedy_rank_matches_brute_force_on_all_small_sets() {
    let mut combos: Vec<(u64, u64, Flarge)> =
        toy_schedules().into_iter().map(|s| (2, 0, s)).collect();
    combos.push((3, 0, Flarge::const_of(2).unwrap()));
    combos.push((2, 1, Flarge::table(vec![2, 2, 2, 2, 1000], 2).unwrap()));
    for (bigness, level, schedule) in combos {
        let c = ctx(bigness, level, schedule.clone());
        let mut b = Brute::new(bigness, level, schedule.clone());
        for u in 0u64..1 << 10 {
            assert_eq!(
                c.ns(u).unwrap(),
                b.ns(u),
                "set {u:#b}, schedule {schedule}, B={bigness}, n={level}"
            );
        }
    }
}

#[test]
fn rank_is_monotone_under_inclusion() {
    let spike = Flarge::table(vec![2, 2, 2, 2, 1000], 2).unwrap();
    for schedule in [Flarge::const_of(2).unwrap(), spike] {
        let c = ctx(2, 0, schedule);
        for u in 0u64..1 << 9 {
            let r = c.ns(u).unwrap();
            for i in 0..9 {
                if u >> i & 1 == 0 {
                    assert!(c.ns(u | 1 << i).unwrap() >= r);
                }
            }
        }
    }
}

#[test]
fn minimal_block_matches_brute_scan() {
    for schedule in [
        Flarge::const_of(2).unwrap(),
        Flarge::const_of(3).unwrap(),
        Flarge::table(vec![2, 3, 4], 5).unwrap(),
    ] {
        let c = ctx(2, 0, schedule.clone());
        let mut b = Brute::new(2, 0, schedule.clone());
        for a in 0..3u64 {
            for k in 1..=4u64 {
                // Brute cut enumeration is exponential in the interval length.
                let direct = (a + 1..=12).find(|&end| b.ns(block(u64::MAX, a, end)) >= k);
                let Some(end) = direct else { continue };
                let got = c.minimal_block(a, k).unwrap();
                assert_eq!(
                    got.eval(DEFAULT_BIT_BUDGET),
                    Some(BigUint::from(end)),
                    "a={a}, k={k}, schedule {schedule}"
                );
            }
        }
    }
}

#[test]
fn chosen_width_is_minimal() {
    let c = ctx(2, 0, Flarge::Default);
    let (j, _) = c.choose_j().unwrap();
    assert_eq!(j, 4);
    let mut b = Brute::new(2, 0, Flarge::Default);
    assert!(b.ns(block(u64::MAX, 0, j)) >= 2);
    assert!(b.ns(block(u64::MAX, 0, j - 1)) < 2);

    let c2 = ctx(2, 0, Flarge::const_of(2).unwrap());
    let (j2, _) = c2.choose_j().unwrap();
    assert_eq!(j2, 2);
}

/// Independent prenorm: maximum brute rank over every fully-projecting set.
fn brute_prenorm(c: &[u32], width: u32, b: &mut Brute) -> u64 {
    let mut best = 0;
    for u in 0u64..1 << width {
        let k = u.count_ones();
        if 1usize << k > c.len() {
            continue;
        }
        let mut seen = vec![false; 1 << k];
        let mut count = 0;
        for &s in c {
            let p = project(s, u, width) as usize;
            if !seen[p] {
                seen[p] = true;
                count += 1;
            }
        }
        if count == 1 << k {
            best = best.max(b.ns(u));
        }
    }
    best
}

#[test]
fn prenorm_matches_independent_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    for schedule in [Flarge::Default, Flarge::const_of(2).unwrap()] {
        let c = ctx(2, 0, schedule.clone());
        let mut b = Brute::new(2, 0, schedule.clone());
        for _ in 0..300 {
            let width = rng.gen_range(1..=5u32);
            let size = rng.gen_range(1..=(1u32 << width)) as usize;
            let mut set: Vec<u32> = (0..1u32 << width).collect();
            for i in (1..set.len()).rev() {
                let j = rng.gen_range(0..=i);
                set.swap(i, j);
            }
            set.truncate(size);
            set.sort_unstable();
            let got = c.prenorm(&set, width).unwrap();
            assert_eq!(got.value, brute_prenorm(&set, width, &mut b));
            if let Some(w) = got.witness {
                // Every witness block must reach the rank below the value.
                for &blk in &w.blocks {
                    assert!(c.ns(blk).unwrap() >= got.value - 1);
                }
                assert!(w.m_count >= 2);
            }
        }
    }
}

#[test]
fn prenorm_is_monotone_in_the_string_set() {
    let schedule = Flarge::const_of(2).unwrap();
    let c = ctx(2, 0, schedule);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..200 {
        let width = rng.gen_range(1..=4u32);
        let all: Vec<u32> = (0..1u32 << width).collect();
        let sub: Vec<u32> = all
            .iter()
            .copied()
            .filter(|_| rng.gen_bool(0.6))
            .collect();
        if sub.is_empty() {
            continue;
        }
        let sup: Vec<u32> = all
            .iter()
            .copied()
            .filter(|s| sub.contains(s) || rng.gen_bool(0.5))
            .collect();
        assert!(c.prenorm(&sub, width).unwrap().value <= c.prenorm(&sup, width).unwrap().value);
    }
}

/// Exhaustive full-piece pigeonhole check at width <= 3 with up to 3 pieces:
/// for every ambient set full on `u`, every exact cover by pieces, and every
/// disjoint block tuple, some piece is full on its block.
#[test]
fn full_piece_exists_exhaustively_small() {
    let mut case = 0u64;
    for width in 1..=3u32 {
        let patterns = 1u32 << width;
        for u in 0u64..1 << width {
            let cube: Vec<u32> = (0..patterns).collect();
            for cbits in 1u32..1 << patterns {
                let c: Vec<u32> = cube
                    .iter()
                    .copied()
                    .filter(|&s| cbits >> s & 1 == 1)
                    .collect();
                if !full_on(&c, u, width) {
                    continue;
                }
                for t in 1..=3usize {
                    // Piece assignment: element index -> piece.
                    let mut assign = vec![0usize; c.len()];
                    loop {
                        let mut pieces: Vec<Vec<u32>> = vec![Vec::new(); t];
                        for (i, &s) in c.iter().enumerate() {
                            pieces[assign[i]].push(s);
                        }
                        check_blocks(&c, u, &pieces, t, width, &mut case);
                        if !bump(&mut assign, t) {
                            break;
                        }
                    }
                }
            }
        }
    }
    assert!(case > 1_000_000, "exhaustive sweep covered {case} cases");
}

fn full_on(c: &[u32], u: u64, width: u32) -> bool {
    let k = u.count_ones();
    if 1usize << k > c.len() {
        return false;
    }
    let mut seen = vec![false; 1 << k];
    let mut count = 0;
    for &s in c {
        let p = project(s, u, width) as usize;
        if !seen[p] {
            seen[p] = true;
            count += 1;
        }
    }
    count == 1 << k
}

fn bump(assign: &mut [usize], base: usize) -> bool {
    for a in assign.iter_mut() {
        *a += 1;
        if *a < base {
            return true;
        }
        *a = 0;
    }
    false
}

fn check_blocks(c: &[u32], u: u64, pieces: &[Vec<u32>], t: usize, width: u32, case: &mut u64) {
    // Block assignment: each coordinate of u -> one of t blocks or none.
    let coords: Vec<u64> = (0..width as u64).filter(|i| u >> i & 1 == 1).collect();
    let mut assign = vec![0usize; coords.len()];
    loop {
        let mut blocks = vec![0u64; t];
        for (ci, &coord) in coords.iter().enumerate() {
            if assign[ci] > 0 {
                blocks[assign[ci] - 1] |= 1 << coord;
            }
        }
        let exists = pieces
            .iter()
            .zip(&blocks)
            .any(|(p, &b)| full_on(p, b, width));
        assert!(
            exists,
            "no full piece: c={c:?}, u={u:#b}, pieces={pieces:?}, blocks={blocks:?}"
        );
        // Exercise the real search on a deterministic subsample.
        *case += 1;
        if *case % 101 == 0 {
            let idx = pigeonhole_index(c, u, pieces, &blocks, width).unwrap();
            assert!(full_on(&pieces[idx], blocks[idx], width));
        }
        if !bump(&mut assign, t + 1) {
            break;
        }
    }
}

/// Randomized full-piece checks at widths up to 6.
#[test]
fn full_piece_exists_randomized() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..10_000 {
        let width = rng.gen_range(1..=6u32);
        let u: u64 = rng.gen_range(0..1u64 << width);
        let k = u.count_ones();
        // Build a set full on u: one preimage per pattern plus random extras.
        let mut c: Vec<u32> = Vec::new();
        for pat in 0..1u32 << k {
            let mut s: u32 = rng.gen_range(0..1u32 << width);
            // Overwrite the u-coordinates of s with the pattern bits.
            let mut bit = 0;
            for i in 0..width as u64 {
                if u >> i & 1 == 1 {
                    let v = pat >> bit & 1;
                    let pos = width as u64 - 1 - i;
                    s = (s & !(1 << pos)) | v << pos;
                    bit += 1;
                }
            }
            c.push(s);
        }
        for _ in 0..rng.gen_range(0..8) {
            c.push(rng.gen_range(0..1u32 << width));
        }
        c.sort_unstable();
        c.dedup();

        let t = rng.gen_range(1..=3usize);
        let mut pieces: Vec<Vec<u32>> = vec![Vec::new(); t];
        for &s in &c {
            pieces[rng.gen_range(0..t)].push(s);
        }
        let mut blocks = vec![0u64; t];
        for i in 0..width as u64 {
            if u >> i & 1 == 1 {
                let which = rng.gen_range(0..=t);
                if which > 0 {
                    blocks[which - 1] |= 1 << i;
                }
            }
        }
        let idx = pigeonhole_index(&c, u, &pieces, &blocks, width);
        assert!(idx.is_ok(), "c={c:?} u={u:#b} pieces={pieces:?} blocks={blocks:?}");
        let i = idx.unwrap();
        assert!(full_on(&pieces[i], blocks[i], width));
        for j in 0..i {
            assert!(!full_on(&pieces[j], blocks[j], width));
        }
    }
}
