use crate::corpus::PAD_ID;
use crate::error::Result;
use crate::tensor::{ops, Tensor};

/// Dictionary embedding: row `j` of the result is row `ids[j]` of `table`
/// (`[N, d]`). The padding id always embeds to zeros.
pub fn dict_embed(ids: &[usize], table: &Tensor) -> Result<Tensor> {
    ops::row_select(table, ids, Some(PAD_ID))
}

/// Scatters `d_out` rows back into `d_table`; padding rows receive nothing.
pub fn dict_embed_backward(ids: &[usize], d_out: &Tensor, d_table: &mut Tensor) {
    for (j, &id) in ids.iter().enumerate() {
        if id != PAD_ID {
            ops::axpy(1.0, d_out.row(j), d_table.row_mut(id));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Tensor {
        Tensor::from_vec(&[4, 2], vec![7.0, 7.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap()
    }

    #[test]
    fn single_id_is_its_row() {
        assert_eq!(dict_embed(&[2], &table()).unwrap().data(), &[3.0, 4.0]);
    }

    #[test]
    fn all_pad_is_zero() {
        let out = dict_embed(&[0, 0, 0], &table()).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn permuting_ids_permutes_rows() {
        let a = dict_embed(&[1, 2, 3], &table()).unwrap();
        let b = dict_embed(&[3, 1, 2], &table()).unwrap();
        assert_eq!(a.row(0), b.row(1));
        assert_eq!(a.row(1), b.row(2));
        assert_eq!(a.row(2), b.row(0));
    }

    #[test]
    fn backward_skips_pad_and_accumulates_repeats() {
        let d_out = Tensor::from_vec(&[3, 2], vec![1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
        let mut grad = Tensor::zeros(&[4, 2]);
        dict_embed_backward(&[1, 0, 1], &d_out, &mut grad);
        assert_eq!(grad.data(), &[0.0, 0.0, 4.0, 4.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
