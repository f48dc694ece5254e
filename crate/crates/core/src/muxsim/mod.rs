//! Cryo-CMOS SP4T multiplexer: control logic, RF network, dissipation and transient.

pub mod control;
pub mod network;
pub mod power;

pub use control::{programming_time, ControlMode, ControlState, LineLevels};
pub use network::{
    branch_conductance, insertion_loss_db, isolation_db, mux_s_params, port_s21, MuxConfig, SwitchBranch,
};
pub use power::{dissipated_power, rise_time_95, switching_envelope, PowerTable, TransientTable};
