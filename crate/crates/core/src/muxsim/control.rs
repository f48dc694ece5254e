//! Digital control interface of the multiplexer.
//!
//! Parallel mode decodes the binary address on D1:D0 when LE pulses. Serial mode
//! clocks SI into a shift register on rising CLK edges, with the first bit shifted in
//! ending up at port 0, and copies it to the decoder on a rising LE edge. The PS line
//! selects the interface (high = serial) and is sampled at every latch event.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    Parallel,
    Serial,
}

/// Logic levels of the low-frequency control lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LineLevels {
    pub d0: bool,
    pub d1: bool,
    pub le: bool,
    pub clk: bool,
    pub si: bool,
    pub ps: bool,
}

/// Latched digital state of one multiplexer. Transitions return a new value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlState {
    pub mode: ControlMode,
    pub latched_selection: Option<usize>,
    /// Register feeding the branch drivers, updated on latch.
    pub shift_register: Vec<bool>,
    /// Serial shift stage, clocked by CLK.
    pub pending_register: Vec<bool>,
    pub line_levels: LineLevels,
}

fn one_hot(n: usize, idx: Option<usize>) -> Vec<bool> {
    (0..n).map(|i| Some(i) == idx).collect()
}

impl ControlState {
    pub fn new(n_ports: usize, mode: ControlMode) -> Result<Self> {
        if n_ports < 2 {
            return Err(Error::invalid("a multiplexer needs at least 2 ports"));
        }
        Ok(Self {
            mode,
            latched_selection: None,
            shift_register: vec![false; n_ports],
            pending_register: vec![false; n_ports],
            line_levels: LineLevels { ps: mode == ControlMode::Serial, ..LineLevels::default() },
        })
    }

    pub fn n_ports(&self) -> usize {
        self.shift_register.len()
    }

    fn mode_after_latch(&self) -> ControlMode {
        if self.line_levels.ps {
            ControlMode::Serial
        } else {
            ControlMode::Parallel
        }
    }

    fn require(&self, mode: ControlMode) -> Result<()> {
        if self.mode != mode {
            return Err(Error::WrongMode(format!("operation needs {mode:?} mode, device is in {:?}", self.mode)));
        }
        Ok(())
    }

    /// Drive D0/D1 and optionally pulse LE.
    pub fn parallel_write(&self, d0: bool, d1: bool, le_pulse: bool) -> Result<Self> {
        self.require(ControlMode::Parallel)?;
        let mut next = self.clone();
        next.line_levels.d0 = d0;
        next.line_levels.d1 = d1;
        if le_pulse {
            next = next.latch()?;
        }
        Ok(next)
    }

    /// One rising CLK edge with SI at the given level.
    pub fn serial_clock(&self, si: bool) -> Result<Self> {
        self.require(ControlMode::Serial)?;
        let mut next = self.clone();
        next.line_levels.si = si;
        next.pending_register.rotate_left(1);
        let last = next.pending_register.len() - 1;
        next.pending_register[last] = si;
        Ok(next)
    }

    pub fn set_ps(&self, level: bool) -> Self {
        let mut next = self.clone();
        next.line_levels.ps = level;
        next
    }

    /// LE event. A multi-hot serial register or an out-of-range parallel address is
    /// rejected and leaves the state unchanged.
    pub fn latch(&self) -> Result<Self> {
        let selection = match self.mode {
            ControlMode::Parallel => {
                let idx = usize::from(self.line_levels.d0) | (usize::from(self.line_levels.d1) << 1);
                if idx >= self.n_ports() {
                    return Err(Error::InvalidSelection(format!(
                        "address {idx} decodes past the last of {} ports",
                        self.n_ports()
                    )));
                }
                Some(idx)
            }
            ControlMode::Serial => {
                let hot: Vec<usize> =
                    self.pending_register.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i).collect();
                match hot.as_slice() {
                    [] => None,
                    [i] => Some(*i),
                    _ => {
                        return Err(Error::InvalidSelection(format!("pending register selects ports {hot:?}")));
                    }
                }
            }
        };
        let mut next = self.clone();
        next.latched_selection = selection;
        next.shift_register = one_hot(self.n_ports(), selection);
        next.mode = self.mode_after_latch();
        Ok(next)
    }

    /// Apply new line levels, acting on rising CLK (serial mode) and LE edges.
    pub fn apply_lines(&self, lines: LineLevels) -> Result<Self> {
        let prev = self.line_levels;
        let mut next = self.clone();
        next.line_levels = LineLevels { le: prev.le, clk: prev.clk, ..lines };
        if lines.clk && !prev.clk && next.mode == ControlMode::Serial {
            next = next.serial_clock(lines.si)?;
        }
        next.line_levels.clk = lines.clk;
        if lines.le && !prev.le {
            next = next.latch()?;
        }
        next.line_levels.le = lines.le;
        Ok(next)
    }

    /// Program `port` through the parallel interface (requires `n_ports <= 4`).
    pub fn program_parallel(&self, port: usize) -> Result<Self> {
        if port >= self.n_ports() || port > 3 {
            return Err(Error::InvalidSelection(format!("port {port} not addressable")));
        }
        self.parallel_write(port & 1 == 1, port & 2 == 2, true)
    }

    /// Shift a one-hot word for `port` (or all zeros) and latch it.
    pub fn program_serial(&self, port: Option<usize>) -> Result<Self> {
        let n = self.n_ports();
        if let Some(p) = port {
            if p >= n {
                return Err(Error::InvalidSelection(format!("port {p} not present")));
            }
        }
        let mut state = self.clone();
        for bit in one_hot(n, port) {
            state = state.serial_clock(bit)?;
        }
        state.latch()
    }
}

/// Time to program one selection: serial needs one clock per port, parallel a single latch.
pub fn programming_time<T: Scalar>(n_ports: usize, t_clk: T, mode: ControlMode) -> Result<T> {
    if n_ports < 2 || !(t_clk > T::zero()) {
        return Err(Error::invalid("programming time needs n_ports >= 2 and t_clk > 0"));
    }
    Ok(match mode {
        ControlMode::Serial => T::from_usize(n_ports).unwrap() * t_clk,
        ControlMode::Parallel => t_clk,
    })
}
