use nodalkk::cache::CacheFile;
use nodalkk::{LabError, RunConfig};
use nodalkk_core::Complex64;
use proptest::prelude::*;

fn arb_cache() -> impl Strategy<Value = CacheFile> {
    (2u32..=3, 1u32..=3, -5i32..=5, 0usize..=3, any::<u64>(), any::<[u8; 32]>()).prop_flat_map(|(dim, n, m, k, seed, hash)| {
        let len = n.pow(dim) as usize;
        let flux = proptest::collection::vec(any::<i64>(), (dim * dim) as usize);
        let eigenvalues = proptest::collection::vec(any::<f64>(), k);
        let sections = proptest::collection::vec(
            proptest::collection::vec((any::<f64>(), any::<f64>()).prop_map(|(a, b)| Complex64::new(a, b)), len),
            k,
        );
        (flux, eigenvalues, sections).prop_map(move |(flux, eigenvalues, sections)| CacheFile {
            dim,
            n,
            m,
            flux,
            seed,
            config_hash: hash,
            eigenvalues,
            sections,
        })
    })
}

fn bits(c: &CacheFile) -> Vec<u64> {
    let mut v: Vec<u64> = c.eigenvalues.iter().map(|x| x.to_bits()).collect();
    for s in &c.sections {
        v.extend(s.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]));
    }
    v
}

proptest! {
    #[test]
    fn round_trip_is_bitwise(c in arb_cache()) {
        let bytes = c.to_bytes();
        let back = CacheFile::from_bytes(&bytes).unwrap();
        prop_assert_eq!(bits(&back), bits(&c));
        prop_assert_eq!((back.dim, back.n, back.m, back.seed, back.config_hash), (c.dim, c.n, c.m, c.seed, c.config_hash));
        prop_assert_eq!(&back.flux, &c.flux);
        prop_assert_eq!(back.to_bytes(), bytes);
    }
}

#[test]
fn file_round_trip_and_hash_check() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested").join("c.nbl");
    let cfg = RunConfig::default();
    let c = CacheFile {
        dim: 2,
        n: 2,
        m: 1,
        flux: vec![0, 1, -1, 0],
        seed: 3,
        config_hash: cfg.hash_bytes(),
        eigenvalues: vec![6.25],
        sections: vec![vec![Complex64::new(0.5, -0.5); 4]],
    };
    c.write(&path).unwrap();
    assert_eq!(CacheFile::read(&path, &cfg.hash_bytes()).unwrap(), c);
    let mut other = cfg.clone();
    other.geometry.n = 48;
    assert!(matches!(CacheFile::read(&path, &other.hash_bytes()), Err(LabError::HashMismatch { .. })));
    // only the final file is left behind
    let names: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names, vec![std::ffi::OsString::from("c.nbl")]);
}
