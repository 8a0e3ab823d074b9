#![no_main]
use libfuzzer_sys::fuzz_target;

// Input layout: meta, NUL, transitions, NUL, frame bytes.
fuzz_target!(|data: &[u8]| {
    let mut parts = data.splitn(3, |&b| b == 0);
    let (Some(meta), Some(transitions), Some(frames)) = (parts.next(), parts.next(), parts.next()) else {
        return;
    };
    let (Ok(meta), Ok(transitions)) = (std::str::from_utf8(meta), std::str::from_utf8(transitions)) else {
        return;
    };
    let _ = imrl::replay::parse_log(meta, frames, transitions);
});
