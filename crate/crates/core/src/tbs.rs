//! LTE uplink resource grid and transport block sizes.
//!
//! The table is the uplink TBS table (I_TBS 0..=26 by 1..=100 PRBs) shipped as
//! `data/tbs_ul.txt` and embedded at build time. A replacement table can be
//! loaded from disk with the same format: a `#` header line carrying the
//! version string, then one `itbs prb_count bits` record per line.

use std::path::Path;
use std::sync::OnceLock;

use num_traits::Float;

use crate::error::{Error, Result};

pub const MAX_PRBS: u32 = 100;
pub const MAX_MCS: u8 = 28;
pub const NUM_ITBS: usize = 27;

const EMBEDDED_TABLE: &str = include_str!("../data/tbs_ul.txt");

/// Environment variable naming an alternative TBS table file.
pub const TBS_TABLE_ENV: &str = "ULGRANT_TBS_TABLE";

/// Cell bandwidth in PRBs and the fixed MCS every grant uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellConfig {
    pub bandwidth_prbs: u32,
    pub mcs_index: u8,
}

impl Default for CellConfig {
    fn default() -> Self {
        CellConfig {
            bandwidth_prbs: 25,
            mcs_index: 7,
        }
    }
}

impl CellConfig {
    /// Standard channel bandwidths (5, 10, 15, 20 MHz).
    pub const STANDARD_BANDWIDTHS: [u32; 4] = [25, 50, 75, 100];

    pub fn new(bandwidth_prbs: u32, mcs_index: u8) -> Result<Self> {
        let cell = CellConfig {
            bandwidth_prbs,
            mcs_index,
        };
        cell.validate()?;
        Ok(cell)
    }

    /// Any bandwidth in 1..=100 is accepted so tests can use small grids.
    pub fn validate(&self) -> Result<()> {
        check_prbs("bandwidth_prbs", self.bandwidth_prbs)?;
        mcs_to_itbs(self.mcs_index).map(|_| ())
    }

    pub fn is_standard_bandwidth(&self) -> bool {
        Self::STANDARD_BANDWIDTHS.contains(&self.bandwidth_prbs)
    }
}

/// Uplink MCS to I_TBS mapping.
///
/// Every uplink MCS in 0..=28 has a defined I_TBS; 11 and 21 are the
/// modulation switch points and repeat the I_TBS of their predecessor. The
/// retransmission-only indices (29..=31) lie outside the accepted domain.
pub fn mcs_to_itbs(mcs: u8) -> Result<u8> {
    match mcs {
        0..=10 => Ok(mcs),
        11 => Ok(10),
        12..=20 => Ok(mcs - 1),
        21 => Ok(19),
        22..=28 => Ok(mcs - 2),
        _ => Err(Error::Parameter {
            name: "mcs",
            value: mcs as i64,
            expected: "0..=28",
        }),
    }
}

fn check_prbs(name: &'static str, prbs: u32) -> Result<()> {
    if (1..=MAX_PRBS).contains(&prbs) {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value: prbs as i64,
            expected: "1..=100",
        })
    }
}

/// Transport block sizes in bits, indexed by I_TBS and PRB count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TbsTable {
    version: String,
    // row-major: itbs * MAX_PRBS + (prbs - 1)
    bits: Vec<u32>,
}

impl TbsTable {
    /// The embedded standard table. Parsed once, shared by every caller.
    pub fn standard() -> &'static TbsTable {
        static TABLE: OnceLock<TbsTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            TbsTable::parse(EMBEDDED_TABLE, "embedded:tbs_ul.txt")
                .expect("embedded TBS table is well formed")
        })
    }

    /// The table named by `ULGRANT_TBS_TABLE`, or the embedded one.
    pub fn from_env() -> Result<TbsTable> {
        match std::env::var_os(TBS_TABLE_ENV) {
            Some(path) if !path.is_empty() => TbsTable::load(Path::new(&path)),
            _ => Ok(TbsTable::standard().clone()),
        }
    }

    pub fn load(path: &Path) -> Result<TbsTable> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TbsTable::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<TbsTable> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            origin: origin.to_string(),
            line,
            msg,
        };

        let mut lines = text.lines().enumerate();
        let version = match lines.next() {
            Some((_, header)) if header.starts_with('#') => {
                header.trim_start_matches('#').trim().to_string()
            }
            _ => return Err(parse_err(1, "missing `#` version header".into())),
        };

        let mut bits = vec![0u32; NUM_ITBS * MAX_PRBS as usize];
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_err(
                    lineno,
                    format!("expected 3 fields, got {}", fields.len()),
                ));
            }
            let num = |s: &str| {
                s.parse::<u32>()
                    .map_err(|e| parse_err(lineno, format!("bad integer `{s}`: {e}")))
            };
            let (itbs, prbs, value) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
            if itbs as usize >= NUM_ITBS || !(1..=MAX_PRBS).contains(&prbs) {
                return Err(parse_err(
                    lineno,
                    format!("index out of range: itbs {itbs}, prbs {prbs}"),
                ));
            }
            if value == 0 {
                return Err(parse_err(
                    lineno,
                    "transport block size must be positive".into(),
                ));
            }
            let slot = &mut bits[itbs as usize * MAX_PRBS as usize + prbs as usize - 1];
            if *slot != 0 {
                return Err(parse_err(
                    lineno,
                    format!("duplicate entry ({itbs}, {prbs})"),
                ));
            }
            *slot = value;
        }

        if let Some(pos) = bits.iter().position(|&b| b == 0) {
            let itbs = pos / MAX_PRBS as usize;
            let prbs = pos % MAX_PRBS as usize + 1;
            return Err(parse_err(0, format!("missing entry ({itbs}, {prbs})")));
        }
        for itbs in 0..NUM_ITBS {
            let row = &bits[itbs * MAX_PRBS as usize..(itbs + 1) * MAX_PRBS as usize];
            if let Some(w) = row.windows(2).position(|w| w[1] < w[0]) {
                return Err(parse_err(
                    0,
                    format!("itbs {itbs}: size decreases at {} PRBs", w + 2),
                ));
            }
        }

        Ok(TbsTable { version, bits })
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    /// Bits carried by `prbs` contiguous PRBs at I_TBS `itbs`.
    pub fn bits_for_itbs(&self, prbs: u32, itbs: u8) -> Result<u32> {
        check_prbs("prbs", prbs)?;
        if itbs as usize >= NUM_ITBS {
            return Err(Error::Parameter {
                name: "itbs",
                value: itbs as i64,
                expected: "0..=26",
            });
        }
        Ok(self.bits[itbs as usize * MAX_PRBS as usize + prbs as usize - 1])
    }

    /// `tbs(n, m)`: bits carried by `prbs` contiguous PRBs at MCS `mcs`.
    pub fn lookup(&self, prbs: u32, mcs: u8) -> Result<u32> {
        let itbs = mcs_to_itbs(mcs)?;
        self.bits_for_itbs(prbs, itbs)
    }

    /// Bits per PRB of a grant of `prbs` blocks.
    pub fn spectral_efficiency<T: Float>(&self, prbs: u32, mcs: u8) -> Result<T> {
        let bits = self.lookup(prbs, mcs)?;
        let bits = T::from(bits).expect("u32 converts to float");
        let prbs = T::from(prbs).expect("u32 converts to float");
        Ok(bits / prbs)
    }
}

/// `tbs(n, m)` against the embedded standard table.
pub fn tbs_lookup(prbs: u32, mcs: u8) -> Result<u32> {
    TbsTable::standard().lookup(prbs, mcs)
}

pub fn spectral_efficiency<T: Float>(prbs: u32, mcs: u8) -> Result<T> {
    TbsTable::standard().spectral_efficiency(prbs, mcs)
}
