//! Complete symbol table, but declares API version 1.

use slambench_core::api::ffi::{SbConfig, SbFrame};

#[no_mangle]
#[allow(non_upper_case_globals)]
pub static sb_api_version: u32 = 1;

#[no_mangle]
pub extern "C" fn sb_new_slam_configuration(_cfg: *mut SbConfig) -> bool {
    true
}

#[no_mangle]
pub extern "C" fn sb_init_slam_system(_cfg: *mut SbConfig) -> bool {
    true
}

#[no_mangle]
pub extern "C" fn sb_update_frame(_cfg: *mut SbConfig, _frame: *const SbFrame) -> bool {
    false
}

#[no_mangle]
pub extern "C" fn sb_process_once(_cfg: *mut SbConfig) -> bool {
    true
}

#[no_mangle]
pub extern "C" fn sb_update_outputs(_cfg: *mut SbConfig) -> bool {
    true
}

#[no_mangle]
pub extern "C" fn sb_clean_slam_system() -> bool {
    true
}
