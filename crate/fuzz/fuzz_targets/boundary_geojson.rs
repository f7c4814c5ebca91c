#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = beatdesign_fuzz::boundary_geojson(data);
});
