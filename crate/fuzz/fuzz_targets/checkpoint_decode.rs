#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(file) = imrl::tensorcore::decode_checkpoint(data) {
        let again = imrl::tensorcore::decode_checkpoint(data).unwrap();
        assert_eq!(file.layers.len(), again.layers.len());
    }
});
