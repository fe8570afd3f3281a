use std::fmt;
use std::io::{Read, Write};
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::moments::StructureMatrix;

/// Generator index `(row, col)`, 0-based. The derived order is lexicographic
/// and is the canonical order used by reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub row: u32,
    pub col: u32,
}

impl Letter {
    pub const fn new(row: usize, col: usize) -> Self {
        Letter {
            row: row as u32,
            col: col as u32,
        }
    }

    /// 1-based constructor matching the usual `x_i(k)` notation.
    pub fn one_based(i: usize, k: usize) -> Self {
        assert!(i >= 1 && k >= 1, "one-based letter indices start at 1");
        Letter::new(i - 1, k - 1)
    }

    pub fn row(&self) -> usize {
        self.row as usize
    }

    pub fn col(&self) -> usize {
        self.col as usize
    }

    pub fn shifted(&self, rows: usize) -> Self {
        Letter::new(self.row() + rows, self.col())
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}({})", self.row + 1, self.col + 1)
    }
}

/// How rows beyond the sampled base block relate to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Every unordered pair of distinct letters is sampled independently.
    Independent,
    /// A base `N x m` table is sampled and repeated `copies` times along the
    /// rows: `eps((i + aN, k), (j + bN, l)) = eps((i, k), (j, l))`.
    TensorRepeated { copies: usize },
}

impl Scheme {
    pub fn copies(&self) -> usize {
        match self {
            Scheme::Independent => 1,
            Scheme::TensorRepeated { copies } => *copies,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Independent => "independent",
            Scheme::TensorRepeated { .. } => "tensor-repeated",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Independent => f.write_str("independent"),
            Scheme::TensorRepeated { copies } => write!(f, "tensor-repeated({copies})"),
        }
    }
}

#[derive(Debug, PartialEq)]
enum Storage {
    /// Full symmetric table over base letters, row-major, values +-1.
    Dense(Vec<i8>),
    /// Signs regenerated on demand from a per-pair ChaCha stream.
    Lazy { thresholds: Vec<f64> },
}

/// Symmetric random sign function on letters with `eps(x, x) = -1`.
///
/// The table stores a base block of `base_rows x m` letters. Rows of the
/// represented algebra may be a multiple of the base (tensor repetition, and
/// the doubled algebra used by the derivation); lookups fold rows modulo the
/// base. Two letters that fold onto the same base letter always get `-1`,
/// consistent with the repetition rule applied to the diagonal.
#[derive(Debug, Clone)]
pub struct EpsilonTable {
    base_rows: usize,
    m: usize,
    copies: usize,
    scheme: Scheme,
    seed: u64,
    storage: Arc<Storage>,
}

/// Probability threshold for a `-1` sign: `(1 - q) / 2`.
fn minus_probability(q: f64) -> f64 {
    (1.0 - q) / 2.0
}

fn lazy_sign(seed: u64, pair: u64, threshold: f64) -> i8 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(pair);
    let u: f64 = rng.random();
    if u < threshold {
        -1
    } else {
        1
    }
}

impl EpsilonTable {
    /// Samples a dense table. For `TensorRepeated`, `q` is the base matrix
    /// and the table represents `q.dim() * copies` rows.
    pub fn sample(q: &StructureMatrix, m: usize, seed: u64, scheme: Scheme) -> Result<Self> {
        Self::check_shape(q.dim(), m, scheme)?;
        let n = q.dim();
        let g = n * m;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut signs = vec![1i8; g * g];
        for x in 0..g {
            signs[x * g + x] = -1;
            for y in (x + 1)..g {
                let p = minus_probability(q.get(x / m, y / m));
                let u: f64 = rng.random();
                let s = if u < p { -1 } else { 1 };
                signs[x * g + y] = s;
                signs[y * g + x] = s;
            }
        }
        Ok(EpsilonTable {
            base_rows: n,
            m,
            copies: scheme.copies(),
            scheme,
            seed,
            storage: Arc::new(Storage::Dense(signs)),
        })
    }

    /// Same distribution as [`sample`](Self::sample) but O(N^2) memory: each
    /// sign is derived from its own ChaCha stream keyed by the pair index.
    /// The two samplers produce different (equally valid) tables.
    pub fn sample_lazy(q: &StructureMatrix, m: usize, seed: u64, scheme: Scheme) -> Result<Self> {
        Self::check_shape(q.dim(), m, scheme)?;
        let n = q.dim();
        let mut thresholds = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                thresholds.push(minus_probability(q.get(i, j)));
            }
        }
        Ok(EpsilonTable {
            base_rows: n,
            m,
            copies: scheme.copies(),
            scheme,
            seed,
            storage: Arc::new(Storage::Lazy { thresholds }),
        })
    }

    /// Deterministic table from a sign function on distinct base letters.
    /// `f` is only called with `a < b`; its result must be `+1` or `-1`.
    pub fn from_fn(
        base_rows: usize,
        m: usize,
        scheme: Scheme,
        mut f: impl FnMut(Letter, Letter) -> i8,
    ) -> Result<Self> {
        Self::check_shape(base_rows, m, scheme)?;
        let g = base_rows * m;
        let mut signs = vec![1i8; g * g];
        for x in 0..g {
            signs[x * g + x] = -1;
            for y in (x + 1)..g {
                let s = f(Letter::new(x / m, x % m), Letter::new(y / m, y % m));
                if s != 1 && s != -1 {
                    return Err(Error::InvalidParameter(format!("sign {s} is not +-1")));
                }
                signs[x * g + y] = s;
                signs[y * g + x] = s;
            }
        }
        Ok(EpsilonTable {
            base_rows,
            m,
            copies: scheme.copies(),
            scheme,
            seed: 0,
            storage: Arc::new(Storage::Dense(signs)),
        })
    }

    /// Table with every off-diagonal sign equal to `s`.
    pub fn constant(base_rows: usize, m: usize, s: i8) -> Result<Self> {
        Self::from_fn(base_rows, m, Scheme::Independent, |_, _| s)
    }

    fn check_shape(n: usize, m: usize, scheme: Scheme) -> Result<()> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidParameter("sign table needs N >= 1 and m >= 1".into()));
        }
        if scheme.copies() == 0 {
            return Err(Error::InvalidParameter("tensor repetition needs copies >= 1".into()));
        }
        if (n * m).checked_mul(n * m).is_none() || n * m > u32::MAX as usize {
            return Err(Error::CapExceeded {
                what: "sign table",
                requested: n * m,
                cap: u32::MAX as usize,
            });
        }
        Ok(())
    }

    /// Rows of the base block that was sampled.
    pub fn base_rows(&self) -> usize {
        self.base_rows
    }

    /// Rows of the algebra this table acts on.
    pub fn rows(&self) -> usize {
        self.base_rows * self.copies
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_lazy(&self) -> bool {
        matches!(*self.storage, Storage::Lazy { .. })
    }

    /// The table for the doubled algebra: rows `N..2N` repeat rows `0..N`.
    pub fn doubled(&self) -> Self {
        let mut t = self.clone();
        t.copies *= 2;
        t
    }

    /// Inverse of [`doubled`](Self::doubled).
    pub fn halved(&self) -> Result<Self> {
        if self.copies % 2 != 0 {
            return Err(Error::InvalidParameter(
                "table has an odd number of row copies; it is not a doubled table".into(),
            ));
        }
        let mut t = self.clone();
        t.copies /= 2;
        Ok(t)
    }

    /// True when both tables give the same signs on the same letter range.
    pub fn compatible(&self, other: &EpsilonTable) -> bool {
        self.base_rows == other.base_rows
            && self.m == other.m
            && self.copies == other.copies
            && self.seed == other.seed
            && (Arc::ptr_eq(&self.storage, &other.storage) || self.storage == other.storage)
    }

    pub fn contains(&self, a: Letter) -> bool {
        a.row() < self.rows() && a.col() < self.m
    }

    fn base_index(&self, a: Letter) -> usize {
        (a.row() % self.base_rows) * self.m + a.col()
    }

    /// `eps(a, b)`. Letters are folded onto the base block first.
    pub fn sign(&self, a: Letter, b: Letter) -> i8 {
        let x = self.base_index(a);
        let y = self.base_index(b);
        if x == y {
            return -1;
        }
        match &*self.storage {
            Storage::Dense(signs) => signs[x * self.base_rows * self.m + y],
            Storage::Lazy { thresholds } => {
                let (lo, hi) = if x < y { (x, y) } else { (y, x) };
                let g = (self.base_rows * self.m) as u64;
                let p = thresholds[(lo / self.m) * self.base_rows + hi / self.m];
                lazy_sign(self.seed, lo as u64 * g + hi as u64, p)
            }
        }
    }

    /// Materializes a lazy table (no-op copy for dense ones).
    pub fn to_dense(&self) -> Self {
        if let Storage::Dense(_) = &*self.storage {
            return self.clone();
        }
        let g = self.base_rows * self.m;
        let mut signs = vec![0i8; g * g];
        for x in 0..g {
            for y in 0..g {
                signs[x * g + y] = self.sign(
                    Letter::new(x / self.m, x % self.m),
                    Letter::new(y / self.m, y % self.m),
                );
            }
        }
        EpsilonTable {
            storage: Arc::new(Storage::Dense(signs)),
            ..self.clone()
        }
    }

    /// Binary dump: magic, then little-endian `N` (base rows), `m`, scheme
    /// byte, copies, seed, then the base `(Nm) x (Nm)` sign matrix row-major,
    /// one bit per entry (bit set means `-1`), LSB first.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.base_rows as u32).to_le_bytes())?;
        out.write_all(&(self.m as u32).to_le_bytes())?;
        out.write_all(&[match self.scheme {
            Scheme::Independent => 0u8,
            Scheme::TensorRepeated { .. } => 1u8,
        }])?;
        out.write_all(&(self.copies as u32).to_le_bytes())?;
        out.write_all(&self.seed.to_le_bytes())?;
        let g = self.base_rows * self.m;
        let mut bytes = vec![0u8; (g * g).div_ceil(8)];
        for x in 0..g {
            for y in 0..g {
                let s = self.sign(
                    Letter::new(x / self.m, x % self.m),
                    Letter::new(y / self.m, y % self.m),
                );
                if s < 0 {
                    let bit = x * g + y;
                    bytes[bit / 8] |= 1 << (bit % 8);
                }
            }
        }
        out.write_all(&bytes)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 6];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a sign table dump".into()));
        }
        let mut u32buf = [0u8; 4];
        let mut read_u32 = |input: &mut R| -> Result<usize> {
            input.read_exact(&mut u32buf)?;
            Ok(u32::from_le_bytes(u32buf) as usize)
        };
        let n = read_u32(&mut input)?;
        let m = read_u32(&mut input)?;
        let mut tag = [0u8; 1];
        input.read_exact(&mut tag)?;
        let copies = read_u32(&mut input)?;
        let mut seedbuf = [0u8; 8];
        input.read_exact(&mut seedbuf)?;
        let seed = u64::from_le_bytes(seedbuf);
        let scheme = match tag[0] {
            0 => Scheme::Independent,
            1 => Scheme::TensorRepeated { copies },
            t => return Err(Error::Parse(format!("unknown scheme tag {t}"))),
        };
        Self::check_shape(n, m, scheme)?;
        let g = n * m;
        let mut bytes = vec![0u8; (g * g).div_ceil(8)];
        input.read_exact(&mut bytes)?;
        let mut signs = vec![1i8; g * g];
        for (bit, s) in signs.iter_mut().enumerate() {
            if bytes[bit / 8] >> (bit % 8) & 1 == 1 {
                *s = -1;
            }
        }
        for x in 0..g {
            if signs[x * g + x] != -1 {
                return Err(Error::Parse("diagonal sign must be -1".into()));
            }
            for y in 0..x {
                if signs[x * g + y] != signs[y * g + x] {
                    return Err(Error::Parse("sign table is not symmetric".into()));
                }
            }
        }
        Ok(EpsilonTable {
            base_rows: n,
            m,
            copies,
            scheme,
            seed,
            storage: Arc::new(Storage::Dense(signs)),
        })
    }
}

const MAGIC: &[u8; 6] = b"MQEPS1";

/// Convenience wrapper over [`EpsilonTable::sample`].
pub fn sample_epsilon(q: &StructureMatrix, m: usize, seed: u64, scheme: Scheme) -> Result<EpsilonTable> {
    EpsilonTable::sample(q, m, seed, scheme)
}

/// Derives an independent seed for task `index` of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng.next_u64()
}
