pub mod check_symbol;
pub mod kernel;
pub mod solve;
pub mod verify_cmd;
