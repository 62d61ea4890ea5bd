use proptest::prelude::*;
use tclb::combinatorics::count_multisets_u64;
use tclb::tensors::{random_symmetric, DenseTensor, SymTensor};

proptest! {
    #[test]
    fn pack_unpack_roundtrip(n in 1usize..=5, d in 0usize..=4, seed in any::<u64>()) {
        let x = random_symmetric(n, d, seed);
        prop_assert_eq!(x.values().len() as u64, count_multisets_u64(n as u64, d as u64).unwrap());
        let full = x.unpack();
        prop_assert!(full.is_symmetric());
        prop_assert_eq!(full.values().len(), n.pow(d as u32));
        prop_assert_eq!(full.pack().unwrap(), x);
    }

    #[test]
    fn text_roundtrip(n in 1usize..=4, d in 0usize..=3, seed in any::<u64>()) {
        let x = SymTensor::random(n, d, seed);
        prop_assert_eq!(SymTensor::from_text(&x.to_text()).unwrap(), x);
    }
}

#[test]
fn nonsymmetric_tensors_do_not_pack() {
    let mut found = false;
    for seed in 0..20 {
        let x = DenseTensor::random(3, 2, seed);
        if !x.is_symmetric() {
            assert!(x.pack().is_err());
            found = true;
        }
    }
    assert!(found, "random dense tensors should not all be symmetric");
}
