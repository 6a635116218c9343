//! Acquisition-time perceptual transform: a keyed, channel-uniform pixel
//! permutation and its inverse.

use crate::error::Result;
use crate::key::{invert_key, PermKey};
use crate::ops::gather_spatial;
use crate::tensor::Tensor;

/// `out[c, i, j] = image[c, key(i, j)]`, the same permutation for every
/// channel.
pub fn shuffle(image: &Tensor, key: &PermKey) -> Result<Tensor> {
    gather_spatial(image, key)
}

/// Undoes [`shuffle`] by gathering through the inverse key.
pub fn unshuffle(image: &Tensor, key: &PermKey) -> Result<Tensor> {
    gather_spatial(image, &invert_key(key)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::generate_key;

    fn square() -> Tensor {
        Tensor::new(&[1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap()
    }

    #[test]
    fn reversal_key_by_hand() {
        let key = PermKey::new(2, 2, vec![3, 2, 1, 0]).unwrap();
        let s = shuffle(&square(), &key).unwrap();
        assert_eq!(s.data(), &[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(unshuffle(&s, &key).unwrap().data(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn identity_key_is_noop() {
        let id = PermKey::identity(2, 2).unwrap();
        assert!(shuffle(&square(), &id).unwrap().bit_eq(&square()));
        assert!(unshuffle(&square(), &id).unwrap().bit_eq(&square()));
    }

    #[test]
    fn every_channel_gets_the_same_permutation() {
        let img = Tensor::from_fn(&[3, 4, 5], |k| k as f32 * 0.5 - 3.0).unwrap();
        let key = generate_key(4, 5, 11).unwrap();
        let out = shuffle(&img, &key).unwrap();
        for c in 0..3 {
            let single = Tensor::new(&[1, 4, 5], img.channel(c).to_vec()).unwrap();
            let expect = shuffle(&single, &key).unwrap();
            assert_eq!(out.channel(c), expect.data());
        }
    }

    #[test]
    fn grid_mismatch_names_both_grids() {
        let key = PermKey::identity(3, 2).unwrap();
        let msg = shuffle(&square(), &key).unwrap_err().to_string();
        assert!(msg.contains("3x2") && msg.contains("2x2"), "{msg}");
    }
}
