use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, ArrayView1, Axis, Zip};

use super::loss::{huber_grad, huber_loss};
use super::params::QNetworkParams;
use super::NeuralError;
use crate::scalar::Scalar;

/// Hidden and cell vectors of the LSTM.
#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentState<T> {
    pub hidden: Array1<T>,
    pub cell: Array1<T>,
}

impl<T: Scalar> RecurrentState<T> {
    pub fn zeros(hidden_size: usize) -> Self {
        Self {
            hidden: Array1::zeros(hidden_size),
            cell: Array1::zeros(hidden_size),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.hidden.iter().chain(&self.cell).all(|x| x.is_finite())
    }
}

#[inline]
fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

fn check_input<T: Scalar>(x: &[T], params: &QNetworkParams<T>) -> Result<(), NeuralError> {
    if x.len() != params.w_ih.ncols() {
        return Err(NeuralError::Shape(format!(
            "observation has {} features, network expects {}",
            x.len(),
            params.w_ih.ncols()
        )));
    }
    Ok(())
}

/// One LSTM update:
/// `c' = f*c + i*g`, `h' = o*tanh(c')` with sigmoid `i, f, o` and tanh `g`.
pub fn recurrent_step<T: Scalar>(
    x: &[T],
    state: &RecurrentState<T>,
    params: &QNetworkParams<T>,
) -> Result<RecurrentState<T>, NeuralError> {
    check_input(x, params)?;
    let h = params.w_hh.ncols();
    if state.hidden.len() != h || state.cell.len() != h {
        return Err(NeuralError::Shape(format!(
            "recurrent state width {}/{} does not match hidden size {h}",
            state.hidden.len(),
            state.cell.len()
        )));
    }
    let z = params.w_ih.dot(&ArrayView1::from(x)) + params.w_hh.dot(&state.hidden) + &params.b;
    let mut hidden = Array1::zeros(h);
    let mut cell = Array1::zeros(h);
    for k in 0..h {
        let i = sigmoid(z[k]);
        let f = sigmoid(z[h + k]);
        let g = z[2 * h + k].tanh();
        let o = sigmoid(z[3 * h + k]);
        let c = f * state.cell[k] + i * g;
        cell[k] = c;
        hidden[k] = o * c.tanh();
    }
    Ok(RecurrentState { hidden, cell })
}

/// Dense head applied to a hidden vector.
pub fn q_values<T: Scalar>(hidden: &Array1<T>, params: &QNetworkParams<T>) -> Array1<T> {
    params.head_w.dot(hidden) + &params.head_b
}

/// Folds [`recurrent_step`] over `sequence` from a zero state and applies the head.
pub fn q_forward<T: Scalar, S: AsRef<[T]>>(
    sequence: &[S],
    params: &QNetworkParams<T>,
) -> Result<(Array1<T>, RecurrentState<T>), NeuralError> {
    if sequence.is_empty() {
        return Err(NeuralError::Domain("q_forward needs a non-empty sequence".into()));
    }
    let mut state = RecurrentState::zeros(params.w_hh.ncols());
    for x in sequence {
        state = recurrent_step(x.as_ref(), &state, params)?;
    }
    Ok((q_values(&state.hidden, params), state))
}

/// Variable-length sequences packed for batched unrolling.
///
/// Sequences are right-aligned: a sequence of length `n` occupies the last `n`
/// of `len()` steps, so every sequence ends on the final step. Leading padding
/// rows are zero and masked out of the recurrence.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceBatch<T> {
    steps: Vec<Array2<T>>,
    lengths: Vec<usize>,
}

impl<T: Scalar> SequenceBatch<T> {
    pub fn new<S: AsRef<[T]>>(obs_dim: usize, sequences: &[&[S]]) -> Result<Self, NeuralError> {
        if sequences.is_empty() {
            return Err(NeuralError::Domain("empty batch".into()));
        }
        let lengths: Vec<usize> = sequences.iter().map(|s| s.len()).collect();
        if lengths.contains(&0) {
            return Err(NeuralError::Domain("batch contains an empty sequence".into()));
        }
        let n_steps = *lengths.iter().max().expect("non-empty");
        let mut steps = vec![Array2::zeros((sequences.len(), obs_dim)); n_steps];
        for (row, seq) in sequences.iter().enumerate() {
            let offset = n_steps - seq.len();
            for (k, x) in seq.iter().enumerate() {
                let x = x.as_ref();
                if x.len() != obs_dim {
                    return Err(NeuralError::Shape(format!(
                        "observation has {} features, expected {obs_dim}",
                        x.len()
                    )));
                }
                steps[offset + k].row_mut(row).assign(&ArrayView1::from(x));
            }
        }
        Ok(Self { steps, lengths })
    }

    pub fn batch_size(&self) -> usize {
        self.lengths.len()
    }

    /// Number of unrolled steps (the longest sequence).
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    fn mask(&self, t: usize) -> Array1<T> {
        let n = self.len();
        self.lengths
            .iter()
            .map(|&l| if t + l >= n { T::one() } else { T::zero() })
            .collect()
    }
}

/// Activations kept for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache<T> {
    inputs: Vec<Array2<T>>,
    masks: Vec<Array1<T>>,
    /// Activated gates `[i | f | g | o]`, `B x 4H`.
    gates: Vec<Array2<T>>,
    /// `tanh(c_t)`.
    tanh_cells: Vec<Array2<T>>,
    /// `h_t`, `c_t` for `t = -1..len`.
    hiddens: Vec<Array2<T>>,
    cells: Vec<Array2<T>>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn final_hidden(&self) -> &Array2<T> {
        self.hiddens.last().expect("at least the initial state")
    }
}

/// Unrolls the batch from zero states and returns the final-step Q-values (`B x A`).
pub fn forward_batch<T: Scalar>(
    params: &QNetworkParams<T>,
    batch: &SequenceBatch<T>,
) -> Result<(Array2<T>, ForwardCache<T>), NeuralError> {
    params.validate()?;
    let b = batch.batch_size();
    let h = params.w_hh.ncols();
    if batch.steps[0].ncols() != params.w_ih.ncols() {
        return Err(NeuralError::Shape(format!(
            "batch has {} features, network expects {}",
            batch.steps[0].ncols(),
            params.w_ih.ncols()
        )));
    }
    let mut cache = ForwardCache {
        inputs: batch.steps.clone(),
        masks: Vec::with_capacity(batch.len()),
        gates: Vec::with_capacity(batch.len()),
        tanh_cells: Vec::with_capacity(batch.len()),
        hiddens: vec![Array2::zeros((b, h))],
        cells: vec![Array2::zeros((b, h))],
    };
    let w_ih_t = params.w_ih.t();
    let w_hh_t = params.w_hh.t();
    for (t, x) in batch.steps.iter().enumerate() {
        let mask = batch.mask(t);
        let h_prev = cache.hiddens.last().expect("seeded");
        let c_prev = cache.cells.last().expect("seeded");
        let mut z = Array2::from_shape_fn((b, 4 * h), |(_, k)| params.b[k]);
        general_mat_mul(T::one(), x, &w_ih_t, T::one(), &mut z);
        general_mat_mul(T::one(), h_prev, &w_hh_t, T::one(), &mut z);
        z.slice_mut(s![.., 0..2 * h]).mapv_inplace(sigmoid);
        z.slice_mut(s![.., 2 * h..3 * h]).mapv_inplace(|v| v.tanh());
        z.slice_mut(s![.., 3 * h..]).mapv_inplace(sigmoid);

        let mut c = Array2::zeros((b, h));
        Zip::from(&mut c)
            .and(&z.slice(s![.., 0..h]))
            .and(&z.slice(s![.., h..2 * h]))
            .and(&z.slice(s![.., 2 * h..3 * h]))
            .and(c_prev)
            .for_each(|c, &i, &f, &g, &cp| *c = f * cp + i * g);
        for (mut row, &m) in c.axis_iter_mut(Axis(0)).zip(&mask) {
            if m == T::zero() {
                row.fill(T::zero());
            }
        }
        let tc = c.mapv(|v| v.tanh());
        let mut hn = Array2::zeros((b, h));
        Zip::from(&mut hn)
            .and(&z.slice(s![.., 3 * h..]))
            .and(&tc)
            .for_each(|hn, &o, &tc| *hn = o * tc);
        for (mut row, &m) in hn.axis_iter_mut(Axis(0)).zip(&mask) {
            if m == T::zero() {
                row.fill(T::zero());
            }
        }
        cache.masks.push(mask);
        cache.gates.push(z);
        cache.tanh_cells.push(tc);
        cache.hiddens.push(hn);
        cache.cells.push(c);
    }
    let mut q = Array2::from_shape_fn((b, params.head_b.len()), |(_, a)| params.head_b[a]);
    general_mat_mul(T::one(), cache.final_hidden(), &params.head_w.t(), T::one(), &mut q);
    Ok((q, cache))
}

/// Mean Huber loss of `q[row, actions[row]] - targets[row]` and its gradient
/// with respect to every parameter, by backpropagation through time.
pub fn backward_batch<T: Scalar>(
    params: &QNetworkParams<T>,
    cache: &ForwardCache<T>,
    q: &Array2<T>,
    actions: &[usize],
    targets: &[T],
    delta: T,
) -> Result<(T, QNetworkParams<T>), NeuralError> {
    let b = q.nrows();
    let h = params.w_hh.ncols();
    let n_actions = params.head_b.len();
    if actions.len() != b || targets.len() != b {
        return Err(NeuralError::Shape(format!(
            "batch of {b} needs as many actions and targets, got {} and {}",
            actions.len(),
            targets.len()
        )));
    }
    if let Some(&a) = actions.iter().find(|&&a| a >= n_actions) {
        return Err(NeuralError::Shape(format!("action {a} outside [0, {n_actions})")));
    }
    let mut grads = QNetworkParams::zeros(params.shape());
    let scale = T::one() / T::lit(b as f64);
    let h_final = cache.final_hidden();
    let mut loss = T::zero();
    let mut dh = Array2::zeros((b, h));
    for row in 0..b {
        let a = actions[row];
        let err = q[(row, a)] - targets[row];
        loss = loss + huber_loss(err, delta)?;
        let g = huber_grad(err, delta)? * scale;
        grads.head_b[a] = grads.head_b[a] + g;
        grads.head_w.row_mut(a).scaled_add(g, &h_final.row(row));
        dh.row_mut(row).scaled_add(g, &params.head_w.row(a));
    }
    loss = loss * scale;
    backprop_recurrence(params, cache, dh, |_| None, &mut grads);
    Ok((loss, grads))
}

/// Backpropagates `dh` (the gradient at the final hidden state) through the
/// unrolled recurrence into `grads`. `inject(t)` adds a gradient on `h_t` from
/// an output attached at step `t`.
fn backprop_recurrence<'a, T: Scalar>(
    params: &QNetworkParams<T>,
    cache: &ForwardCache<T>,
    mut dh: Array2<T>,
    inject: impl Fn(usize) -> Option<&'a Array2<T>>,
    grads: &mut QNetworkParams<T>,
) {
    let b = dh.nrows();
    let h = params.w_hh.ncols();
    let mut dc: Array2<T> = Array2::zeros((b, h));
    let mut dz = Array2::zeros((b, 4 * h));
    for t in (0..cache.gates.len()).rev() {
        if let Some(extra) = inject(t) {
            dh.scaled_add(T::one(), extra);
        }
        let gates = &cache.gates[t];
        let tc = &cache.tanh_cells[t];
        let c_prev = &cache.cells[t];
        let mask = &cache.masks[t];
        for row in 0..b {
            if mask[row] == T::zero() {
                dz.row_mut(row).fill(T::zero());
                dc.row_mut(row).fill(T::zero());
                continue;
            }
            for k in 0..h {
                let i = gates[(row, k)];
                let f = gates[(row, h + k)];
                let g = gates[(row, 2 * h + k)];
                let o = gates[(row, 3 * h + k)];
                let tck = tc[(row, k)];
                let dhk = dh[(row, k)];
                let dck = dc[(row, k)] + dhk * o * (T::one() - tck * tck);
                dz[(row, k)] = dck * g * i * (T::one() - i);
                dz[(row, h + k)] = dck * c_prev[(row, k)] * f * (T::one() - f);
                dz[(row, 2 * h + k)] = dck * i * (T::one() - g * g);
                dz[(row, 3 * h + k)] = dhk * tck * o * (T::one() - o);
                dc[(row, k)] = dck * f;
            }
        }
        general_mat_mul(T::one(), &dz.t(), &cache.inputs[t], T::one(), &mut grads.w_ih);
        general_mat_mul(T::one(), &dz.t(), &cache.hiddens[t], T::one(), &mut grads.w_hh);
        grads.b.scaled_add(T::one(), &dz.sum_axis(Axis(0)));
        dh = dz.dot(&params.w_hh);
    }
}

/// Q-values after every unrolled step: element `t` is `B x A`, computed from `h_t`.
pub fn q_all_steps<T: Scalar>(params: &QNetworkParams<T>, cache: &ForwardCache<T>) -> Vec<Array2<T>> {
    cache.hiddens[1..]
        .iter()
        .map(|hidden| {
            let mut q = Array2::from_shape_fn((hidden.nrows(), params.head_b.len()), |(_, a)| params.head_b[a]);
            general_mat_mul(T::one(), hidden, &params.head_w.t(), T::one(), &mut q);
            q
        })
        .collect()
}

/// One supervised output: Huber loss on `Q(h_step)[action] - target` for batch row `row`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepTarget<T> {
    pub step: usize,
    pub row: usize,
    pub action: usize,
    pub target: T,
}

/// Mean Huber loss over `targets`, which may sit at any unrolled step, and its
/// gradient by backpropagation through time.
pub fn backward_steps<T: Scalar>(
    params: &QNetworkParams<T>,
    cache: &ForwardCache<T>,
    targets: &[StepTarget<T>],
    delta: T,
) -> Result<(T, QNetworkParams<T>), NeuralError> {
    if targets.is_empty() {
        return Err(NeuralError::Domain("no supervised outputs".into()));
    }
    let n_steps = cache.gates.len();
    let (b, h) = cache.hiddens[0].dim();
    let n_actions = params.head_b.len();
    let mut grads = QNetworkParams::zeros(params.shape());
    let scale = T::one() / T::lit(targets.len() as f64);
    let mut inject: Vec<Option<Array2<T>>> = vec![None; n_steps];
    let mut loss = T::zero();
    for st in targets {
        if st.step >= n_steps || st.row >= b || st.action >= n_actions {
            return Err(NeuralError::Shape(format!(
                "supervised output (step {}, row {}, action {}) outside {n_steps} x {b} x {n_actions}",
                st.step, st.row, st.action
            )));
        }
        if cache.masks[st.step][st.row] == T::zero() {
            return Err(NeuralError::Domain(format!(
                "row {} has no input at step {}",
                st.row, st.step
            )));
        }
        let hidden = cache.hiddens[st.step + 1].row(st.row);
        let q = params.head_w.row(st.action).dot(&hidden) + params.head_b[st.action];
        let err = q - st.target;
        loss = loss + huber_loss(err, delta)?;
        let g = huber_grad(err, delta)? * scale;
        grads.head_b[st.action] = grads.head_b[st.action] + g;
        grads.head_w.row_mut(st.action).scaled_add(g, &hidden);
        inject[st.step]
            .get_or_insert_with(|| Array2::zeros((b, h)))
            .row_mut(st.row)
            .scaled_add(g, &params.head_w.row(st.action));
    }
    backprop_recurrence(params, cache, Array2::zeros((b, h)), |t| inject[t].as_ref(), &mut grads);
    Ok((loss * scale, grads))
}

/// Forward and backward pass over a batch.
pub fn loss_and_gradients<T: Scalar>(
    params: &QNetworkParams<T>,
    batch: &SequenceBatch<T>,
    actions: &[usize],
    targets: &[T],
    delta: T,
) -> Result<(T, QNetworkParams<T>), NeuralError> {
    let (q, cache) = forward_batch(params, batch)?;
    backward_batch(params, &cache, &q, actions, targets, delta)
}

/// Gradients of `Huber(q[action] - td_target)` for a single sequence.
pub fn backward<T: Scalar, S: AsRef<[T]>>(
    sequence: &[S],
    action: usize,
    td_target: T,
    params: &QNetworkParams<T>,
    delta: T,
) -> Result<QNetworkParams<T>, NeuralError> {
    let batch = SequenceBatch::new(params.w_ih.ncols(), &[sequence])?;
    Ok(loss_and_gradients(params, &batch, &[action], &[td_target], delta)?.1)
}
