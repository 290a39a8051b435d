//! Block-fading multipath MIMO channel.
//!
//! Each receive antenna `k` observes a window of `L` samples
//! `y_k = sum_j H_{k,j} x_j + n_k`, where `x_j = [x_j[i], x_j[i-1], ...,
//! x_j[i-L+1]]` is the newest-first window of antenna `j` and `H_{k,j}` is the
//! `L x L` banded lower-triangular Toeplitz matrix whose first column holds the
//! path gains `[h_0, ..., h_{Lp-1}, 0, ..., 0]`. Stacking receive antennas
//! gives `y = H x_T + n` with `H` of size `L N_R x L N_T`.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{complex_gaussian_vector, ComplexMatrix, ComplexVector, SeededRng, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit antennas, `N_T`.
    pub n_tx: usize,
    /// Receive antennas, `N_R`.
    pub n_rx: usize,
    /// Observation window per antenna, `L`.
    pub window_len: usize,
    /// Propagation paths per antenna pair, `L_p`.
    pub n_paths: usize,
    pub snr_db: f64,
    /// Transmitted symbol variance; the QPSK mapper produces unit energy.
    pub symbol_variance: f64,
    pub packet_len: usize,
    pub train_len: usize,
}

impl Default for SystemConfig {
    /// 4x8 spatial multiplexing, `L = 5`, three unit-spaced paths, 250
    /// training symbols followed by 1000 payload symbols.
    fn default() -> Self {
        Self {
            n_tx: 4,
            n_rx: 8,
            window_len: 5,
            n_paths: 3,
            snr_db: 12.0,
            symbol_variance: 1.0,
            packet_len: 1250,
            train_len: 250,
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("n_tx", self.n_tx),
            ("n_rx", self.n_rx),
            ("window_len", self.window_len),
            ("n_paths", self.n_paths),
            ("packet_len", self.packet_len),
            ("train_len", self.train_len),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if self.window_len <= self.n_paths {
            return Err(Error::Config(format!(
                "window_len ({}) must exceed n_paths ({})",
                self.window_len, self.n_paths
            )));
        }
        if self.packet_len < self.train_len {
            return Err(Error::Config(format!(
                "packet_len ({}) must be >= train_len ({})",
                self.packet_len, self.train_len
            )));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        if self.symbol_variance != 1.0 {
            return Err(Error::Config(format!(
                "symbol_variance must be 1 for the unit-energy QPSK mapper, got {}",
                self.symbol_variance
            )));
        }
        Ok(())
    }

    /// `L N_R`, the received-vector dimension.
    pub fn obs_len(&self) -> usize {
        self.window_len * self.n_rx
    }

    /// `L N_T`, the transmit-window dimension.
    pub fn tx_len(&self) -> usize {
        self.window_len * self.n_tx
    }

    pub fn noise_variance(&self) -> f64 {
        noise_variance_from_snr(self.snr_db, self.n_tx, self.symbol_variance)
    }
}

/// `sigma^2 = N_T sigma_x^2 10^(-snr_db / 10)`, the inverse of
/// `SNR = 10 log10(N_T sigma_x^2 / sigma^2)`.
pub fn noise_variance_from_snr(snr_db: f64, n_tx: usize, symbol_variance: f64) -> f64 {
    n_tx as f64 * symbol_variance * 10f64.powf(-snr_db / 10.0)
}

/// Path gains and block channel matrix of one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n_rx: usize,
    n_tx: usize,
    n_paths: usize,
    window_len: usize,
    /// Indexed `[k][j][p]`, flattened.
    gains: Vec<Complex64>,
    block: ComplexMatrix,
}

impl ChannelRealization {
    /// Build from gains laid out as `gains[(k * n_tx + j) * n_paths + p]`.
    pub fn from_gains(
        n_rx: usize,
        n_tx: usize,
        n_paths: usize,
        window_len: usize,
        gains: Vec<Complex64>,
    ) -> Result<Self> {
        if gains.len() != n_rx * n_tx * n_paths {
            return Err(Error::dim("ChannelRealization::from_gains", n_rx * n_tx * n_paths, gains.len()));
        }
        if n_paths == 0 || window_len <= n_paths {
            return Err(Error::Config(format!(
                "window_len ({window_len}) must exceed n_paths ({n_paths}) >= 1"
            )));
        }
        let mut block = ComplexMatrix::zeros(window_len * n_rx, window_len * n_tx);
        for k in 0..n_rx {
            for j in 0..n_tx {
                for p in 0..n_paths {
                    let g = gains[(k * n_tx + j) * n_paths + p];
                    for r in p..window_len {
                        block[(k * window_len + r, j * window_len + r - p)] = g;
                    }
                }
            }
        }
        Ok(Self {
            n_rx,
            n_tx,
            n_paths,
            window_len,
            gains,
            block,
        })
    }

    pub fn gain(&self, rx: usize, tx: usize, path: usize) -> Complex64 {
        self.gains[(rx * self.n_tx + tx) * self.n_paths + path]
    }

    pub fn gains(&self) -> &[Complex64] {
        &self.gains
    }

    /// `H`, of size `L N_R x L N_T`.
    pub fn block_matrix(&self) -> &ComplexMatrix {
        &self.block
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    /// Plain-text dump: a header line, then one line per `(k, j)` pair with
    /// the `L_p` gains as space-separated `re,im` tokens.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# n_rx={} n_tx={} n_paths={} window_len={}\n",
            self.n_rx, self.n_tx, self.n_paths, self.window_len
        );
        for pair in self.gains.chunks(self.n_paths) {
            let line: Vec<String> = pair.iter().map(|g| format!("{},{}", g.re, g.im)).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty channel dump".into()))?;
        let header = header
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("channel dump must start with a '#' header".into()))?;
        let (mut n_rx, mut n_tx, mut n_paths, mut window_len) = (None, None, None, None);
        for field in header.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field '{field}'")))?;
            let value: usize = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad header value '{field}'")))?;
            match key {
                "n_rx" => n_rx = Some(value),
                "n_tx" => n_tx = Some(value),
                "n_paths" => n_paths = Some(value),
                "window_len" => window_len = Some(value),
                _ => return Err(Error::Parse(format!("unknown header key '{key}'"))),
            }
        }
        let missing = |name: &str| Error::Parse(format!("header is missing {name}"));
        let n_rx = n_rx.ok_or_else(|| missing("n_rx"))?;
        let n_tx = n_tx.ok_or_else(|| missing("n_tx"))?;
        let n_paths = n_paths.ok_or_else(|| missing("n_paths"))?;
        let window_len = window_len.ok_or_else(|| missing("window_len"))?;

        let mut gains = Vec::with_capacity(n_rx * n_tx * n_paths);
        for line in lines {
            let row = parse_complex_row(line)?;
            if row.len() != n_paths {
                return Err(Error::Parse(format!(
                    "expected {n_paths} gains per line, got {}",
                    row.len()
                )));
            }
            gains.extend(row);
        }
        Self::from_gains(n_rx, n_tx, n_paths, window_len, gains)
    }
}

/// Parse whitespace-separated `re,im` tokens.
pub(crate) fn parse_complex_row(line: &str) -> Result<Vec<Complex64>> {
    line.split_whitespace()
        .map(|tok| {
            let (re, im) = tok
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected re,im but found '{tok}'")))?;
            let re: f64 = re.parse().map_err(|_| Error::Parse(format!("bad real part '{re}'")))?;
            let im: f64 = im.parse().map_err(|_| Error::Parse(format!("bad imaginary part '{im}'")))?;
            Ok(Complex64::new(re, im))
        })
        .collect()
}

/// Draw `L_p` i.i.d. unit-variance complex Gaussian gains per antenna pair,
/// with path `p` at a delay of `p` symbols.
pub fn draw_channel(rng: &mut SeededRng, cfg: &SystemConfig) -> Result<ChannelRealization> {
    cfg.validate()?;
    let gains = (0..cfg.n_rx * cfg.n_tx * cfg.n_paths)
        .map(|_| rng.complex_normal())
        .collect();
    ChannelRealization::from_gains(cfg.n_rx, cfg.n_tx, cfg.n_paths, cfg.window_len, gains)
}

/// `y = H x_T + n` with `n ~ CN(0, noise_var I)`.
pub fn receive(
    ch: &ChannelRealization,
    tx_window: &ComplexVector,
    noise_var: f64,
    rng: &mut SeededRng,
) -> Result<ComplexVector> {
    let expected = ch.block.cols();
    if tx_window.len() != expected {
        return Err(Error::dim("receive", expected, tx_window.len()));
    }
    let mut y = ch.block.mul_vec(tx_window);
    let noise = complex_gaussian_vector(rng, y.len(), noise_var);
    for (a, n) in y.iter_mut().zip(noise.iter()) {
        *a += n;
    }
    Ok(y)
}

/// Stack the newest-first windows `[x_k[i], x_k[i-1], ..., x_k[i-L+1]]` of
/// every transmit antenna; samples before the packet start are zero.
pub fn make_tx_window<S: AsRef<[Complex64]>>(streams: &[S], i: usize, window_len: usize) -> ComplexVector {
    let mut out = ComplexVector::zeros(streams.len() * window_len);
    for (k, stream) in streams.iter().enumerate() {
        let stream = stream.as_ref();
        for s in 0..window_len.min(i + 1) {
            out[k * window_len + s] = stream.get(i - s).copied().unwrap_or(ZERO);
        }
    }
    out
}
