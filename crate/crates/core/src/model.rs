//! Knapsack instances with uniformly uncertain weights and bit-vector
//! solutions with incrementally maintained aggregates.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Offset added to every generated base weight so realized weights stay
/// positive for any half-width up to [`MAX_DELTA`].
pub const WEIGHT_OFFSET: u64 = 100;

/// Largest uncertainty half-width accepted by the generator.
pub const MAX_DELTA: u64 = 100;

/// Inclusive range of base weights and uncorrelated profits.
pub const BASE_RANGE: (u64, u64) = (1, 1000);

pub const DEFAULT_C_CONSTANT: u64 = 100;
pub const DEFAULT_N: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Item {
    pub profit: u64,
    pub expected_weight: u64,
}

impl Item {
    pub fn new(profit: u64, expected_weight: u64) -> Self {
        Item {
            profit,
            expected_weight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstanceKind {
    Uncorrelated,
    BoundedStronglyCorrelated,
}

impl InstanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceKind::Uncorrelated => "uncorrelated",
            InstanceKind::BoundedStronglyCorrelated => "bsc",
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uncorrelated" | "uncorr" => Ok(InstanceKind::Uncorrelated),
            "bsc" | "bounded-strongly-correlated" => Ok(InstanceKind::BoundedStronglyCorrelated),
            other => Err(Error::invalid(format!("unknown instance kind `{other}`"))),
        }
    }
}

/// An immutable knapsack instance. Expected weights already include
/// [`WEIGHT_OFFSET`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    items: Vec<Item>,
    delta: u64,
    kind: InstanceKind,
    c_constant: u64,
    seed: u64,
}

impl Instance {
    pub fn new(
        items: Vec<Item>,
        delta: u64,
        kind: InstanceKind,
        c_constant: u64,
        seed: u64,
    ) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("instance needs at least one item"));
        }
        if delta == 0 {
            return Err(Error::invalid("delta must be positive"));
        }
        for (i, item) in items.iter().enumerate() {
            if item.profit == 0 {
                return Err(Error::invalid(format!("item {i}: profit must be >= 1")));
            }
            if item.expected_weight <= WEIGHT_OFFSET {
                return Err(Error::invalid(format!(
                    "item {i}: expected weight {} must exceed the offset {WEIGHT_OFFSET}",
                    item.expected_weight
                )));
            }
            if delta >= item.expected_weight {
                return Err(Error::invalid(format!(
                    "item {i}: delta {delta} must be below expected weight {}",
                    item.expected_weight
                )));
            }
            if kind == InstanceKind::BoundedStronglyCorrelated
                && item.profit != item.expected_weight - WEIGHT_OFFSET + c_constant
            {
                return Err(Error::invalid(format!(
                    "item {i}: bounded strongly correlated profit must equal base weight + {c_constant}"
                )));
            }
        }
        Ok(Instance {
            items,
            delta,
            kind,
            c_constant,
            seed,
        })
    }

    /// Draws an instance from the benchmark recipe. Identical arguments yield
    /// identical instances.
    pub fn generate(
        kind: InstanceKind,
        n: usize,
        delta: u64,
        c_constant: u64,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("n must be >= 1"));
        }
        if delta == 0 || delta > MAX_DELTA {
            return Err(Error::invalid(format!(
                "delta must lie in [1, {MAX_DELTA}], got {delta}"
            )));
        }
        if c_constant == 0 {
            return Err(Error::invalid("c constant must be >= 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = BASE_RANGE;
        let items = (0..n)
            .map(|_| {
                let base = rng.random_range(lo..=hi);
                let profit = match kind {
                    InstanceKind::Uncorrelated => rng.random_range(lo..=hi),
                    InstanceKind::BoundedStronglyCorrelated => base + c_constant,
                };
                Item::new(profit, base + WEIGHT_OFFSET)
            })
            .collect();
        Instance::new(items, delta, kind, c_constant, seed)
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn item(&self, i: usize) -> &Item {
        &self.items[i]
    }

    pub fn n(&self) -> usize {
        self.items.len()
    }

    pub fn delta(&self) -> u64 {
        self.delta
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn c_constant(&self) -> u64 {
        self.c_constant
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn total_expected_weight(&self) -> u64 {
        self.items.iter().map(|it| it.expected_weight).sum()
    }

    pub fn total_profit(&self) -> u64 {
        self.items.iter().map(|it| it.profit).sum()
    }

    /// Same instance with a different half-width.
    pub fn with_delta(&self, delta: u64) -> Result<Self> {
        Instance::new(
            self.items.clone(),
            delta,
            self.kind,
            self.c_constant,
            self.seed,
        )
    }

    /// Renders the plain-text instance format.
    pub fn serialize(&self) -> String {
        let mut out = format!(
            "n {} delta {} kind {} c {} seed {}\n",
            self.n(),
            self.delta,
            self.kind,
            self.c_constant,
            self.seed
        );
        for item in &self.items {
            out.push_str(&format!("{} {}\n", item.profit, item.expected_weight));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let (hline, header) = lines
            .next()
            .ok_or_else(|| Error::parse(1, "empty instance file"))?;
        let tokens: Vec<&str> = header.split_whitespace().collect();
        if tokens.len() != 10 {
            return Err(Error::parse(
                hline,
                "header must be `n <int> delta <int> kind <uncorrelated|bsc> c <int> seed <u64>`",
            ));
        }
        let expect_key = |idx: usize, key: &str| -> Result<()> {
            if tokens[idx] == key {
                Ok(())
            } else {
                Err(Error::parse(
                    hline,
                    format!("expected `{key}` but found `{}`", tokens[idx]),
                ))
            }
        };
        expect_key(0, "n")?;
        expect_key(2, "delta")?;
        expect_key(4, "kind")?;
        expect_key(6, "c")?;
        expect_key(8, "seed")?;
        let n: usize = parse_field(tokens[1], hline, "n")?;
        let delta: u64 = parse_field(tokens[3], hline, "delta")?;
        let kind: InstanceKind = tokens[5]
            .parse()
            .map_err(|e: Error| Error::parse(hline, e.to_string()))?;
        let c_constant: u64 = parse_field(tokens[7], hline, "c")?;
        let seed: u64 = parse_field(tokens[9], hline, "seed")?;

        let mut items = Vec::with_capacity(n);
        let mut last_line = hline;
        for (lno, line) in lines {
            last_line = lno;
            if items.len() == n {
                return Err(Error::parse(
                    lno,
                    format!("header declares n = {n} but more item lines follow"),
                ));
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::parse(
                    lno,
                    "item line must be `profit expected_weight`",
                ));
            }
            let profit = parse_field(fields[0], lno, "profit")?;
            let weight = parse_field(fields[1], lno, "expected_weight")?;
            items.push(Item::new(profit, weight));
        }
        if items.len() != n {
            return Err(Error::parse(
                last_line,
                format!(
                    "header declares n = {n} but {} item lines found",
                    items.len()
                ),
            ));
        }
        Instance::new(items, delta, kind, c_constant, seed)
            .map_err(|e| Error::parse(hline, e.to_string()))
    }
}

fn parse_field<T: FromStr>(tok: &str, line: usize, name: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("`{tok}` is not a valid integer for {name}")))
}

/// A bit-vector solution together with its profit, expected weight and
/// item count.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Solution {
    bits: Vec<bool>,
    profit: u64,
    expected_weight: u64,
    count: usize,
}

impl Solution {
    pub fn empty(n: usize) -> Self {
        Solution {
            bits: vec![false; n],
            profit: 0,
            expected_weight: 0,
            count: 0,
        }
    }

    pub fn from_bits(items: &[Item], bits: Vec<bool>) -> Result<Self> {
        if bits.len() != items.len() {
            return Err(Error::invalid(format!(
                "bit vector has length {} but the instance has {} items",
                bits.len(),
                items.len()
            )));
        }
        let mut sol = Solution {
            bits,
            profit: 0,
            expected_weight: 0,
            count: 0,
        };
        sol.recompute(items);
        Ok(sol)
    }

    /// Uniform random bit-vector.
    pub fn random<R: Rng + ?Sized>(items: &[Item], rng: &mut R) -> Self {
        let bits = (0..items.len()).map(|_| rng.random_bool(0.5)).collect();
        Solution::from_bits(items, bits).expect("length matches")
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn n(&self) -> usize {
        self.bits.len()
    }

    pub fn profit(&self) -> u64 {
        self.profit
    }

    pub fn expected_weight(&self) -> u64 {
        self.expected_weight
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn toggle(&mut self, items: &[Item], i: usize) -> Result<()> {
        if i >= self.bits.len() || i >= items.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.bits.len(),
            });
        }
        self.flip(items, i);
        Ok(())
    }

    #[inline]
    pub(crate) fn flip(&mut self, items: &[Item], i: usize) {
        let item = items[i];
        if self.bits[i] {
            self.bits[i] = false;
            self.profit -= item.profit;
            self.expected_weight -= item.expected_weight;
            self.count -= 1;
        } else {
            self.bits[i] = true;
            self.profit += item.profit;
            self.expected_weight += item.expected_weight;
            self.count += 1;
        }
    }

    fn recompute(&mut self, items: &[Item]) {
        let (mut p, mut w, mut k) = (0, 0, 0);
        for (bit, item) in self.bits.iter().zip(items) {
            if *bit {
                p += item.profit;
                w += item.expected_weight;
                k += 1;
            }
        }
        self.profit = p;
        self.expected_weight = w;
        self.count = k;
    }

    /// True when the cached aggregates agree with a full rescan.
    pub fn is_consistent(&self, items: &[Item]) -> bool {
        let mut fresh = self.clone();
        fresh.recompute(items);
        fresh == *self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(n: usize, seed: u64) -> Instance {
        Instance::generate(InstanceKind::Uncorrelated, n, 25, 100, seed).unwrap()
    }

    #[test]
    fn single_uncorrelated_item_in_range() {
        let i = Instance::generate(InstanceKind::Uncorrelated, 1, 25, 100, 7).unwrap();
        let it = i.item(0);
        assert!((101..=1100).contains(&it.expected_weight));
        assert!((1..=1000).contains(&it.profit));
    }

    #[test]
    fn bsc_profit_tracks_base_weight() {
        let i = Instance::generate(InstanceKind::BoundedStronglyCorrelated, 5, 25, 100, 3).unwrap();
        for it in i.items() {
            assert_eq!(it.profit, it.expected_weight - 100 + 100);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a =
            Instance::generate(InstanceKind::BoundedStronglyCorrelated, 50, 50, 100, 99).unwrap();
        let b =
            Instance::generate(InstanceKind::BoundedStronglyCorrelated, 50, 50, 100, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.serialize(), b.serialize());
        let c =
            Instance::generate(InstanceKind::BoundedStronglyCorrelated, 50, 50, 100, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generate_rejects_bad_arguments() {
        assert!(Instance::generate(InstanceKind::Uncorrelated, 0, 25, 100, 1).is_err());
        assert!(Instance::generate(InstanceKind::Uncorrelated, 5, 0, 100, 1).is_err());
        assert!(Instance::generate(InstanceKind::Uncorrelated, 5, 101, 100, 1).is_err());
        assert!(Instance::generate(InstanceKind::Uncorrelated, 5, 25, 0, 1).is_err());
        assert!(Instance::generate(InstanceKind::Uncorrelated, 5, 100, 100, 1).is_ok());
    }

    #[test]
    fn ranges_hold_across_many_seeds() {
        for seed in 0..1000 {
            for kind in [
                InstanceKind::Uncorrelated,
                InstanceKind::BoundedStronglyCorrelated,
            ] {
                let i = Instance::generate(kind, 20, 50, 100, seed).unwrap();
                for it in i.items() {
                    assert!((101..=1100).contains(&it.expected_weight));
                    match kind {
                        InstanceKind::Uncorrelated => assert!((1..=1000).contains(&it.profit)),
                        InstanceKind::BoundedStronglyCorrelated => {
                            assert!((101..=1100).contains(&it.profit))
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn toggle_single_bit_on_empty() {
        let items = vec![Item::new(7, 150), Item::new(3, 200)];
        let mut s = Solution::empty(2);
        s.toggle(&items, 0).unwrap();
        assert_eq!((s.profit(), s.expected_weight(), s.count()), (7, 150, 1));
        s.toggle(&items, 0).unwrap();
        assert_eq!(s, Solution::empty(2));
    }

    #[test]
    fn toggle_out_of_range() {
        let items = vec![Item::new(7, 150)];
        let mut s = Solution::empty(1);
        assert!(matches!(
            s.toggle(&items, 1),
            Err(Error::IndexOutOfRange { index: 1, len: 1 })
        ));
    }

    #[test]
    fn round_trip_generated_instance() {
        let i =
            Instance::generate(InstanceKind::BoundedStronglyCorrelated, 10, 50, 100, 5).unwrap();
        assert_eq!(Instance::parse(&i.serialize()).unwrap(), i);
    }

    #[test]
    fn parse_rejects_short_item_list() {
        let text = "n 3 delta 25 kind uncorrelated c 100 seed 1\n10 200\n20 300\n";
        let err = Instance::parse(text).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("n = 3") && msg.contains("2 item lines"),
            "{msg}"
        );
    }

    #[test]
    fn parse_rejects_empty_and_garbage() {
        assert!(matches!(
            Instance::parse(""),
            Err(Error::Parse { line: 1, .. })
        ));
        let text = "n 1 delta 25 kind uncorrelated c 100 seed 1\n10 abc\n";
        assert!(matches!(
            Instance::parse(text),
            Err(Error::Parse { line: 2, .. })
        ));
        let text = "n 1 delta 25 kind weird c 100 seed 1\n10 200\n";
        assert!(matches!(
            Instance::parse(text),
            Err(Error::Parse { line: 1, .. })
        ));
        let text = "n 1 delta 25 kind bsc c 100 seed 1\n10 200\n";
        assert!(Instance::parse(text).is_err());
        let text = "n 1 delta 25 kind uncorrelated c 100 seed 1\n10 200\n5 300\n";
        assert!(matches!(
            Instance::parse(text),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn incremental_aggregates_match_rescan(
            seed in any::<u64>(),
            flips in proptest::collection::vec(0usize..30, 0..200),
        ) {
            let i = inst(30, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
            let mut s = Solution::random(i.items(), &mut rng);
            for f in flips {
                s.toggle(i.items(), f).unwrap();
                prop_assert!(s.is_consistent(i.items()));
                prop_assert!(s.count() <= s.n());
            }
        }

        #[test]
        fn parse_serialize_round_trip(seed in any::<u64>(), n in 1usize..40, delta in 1u64..=100, bsc in any::<bool>()) {
            let kind = if bsc { InstanceKind::BoundedStronglyCorrelated } else { InstanceKind::Uncorrelated };
            let i = Instance::generate(kind, n, delta, 100, seed).unwrap();
            prop_assert_eq!(Instance::parse(&i.serialize()).unwrap(), i);
        }
    }
}
