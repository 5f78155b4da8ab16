"""The invariant skew form and reciprocal singular values.

Each irreducible permutation carries an integer skew form that the
visitation cocycle transports exactly: M^T Omega M equals the form of
the end permutation.  Restricted to the image of the form, the singular
values of a path matrix therefore come in reciprocal pairs a, 1/a.
"""
from random import Random

from ietkit.induction import drive_path
from ietkit.perm import (
    BOTTOM_WINS,
    TOP_WINS,
    hyperelliptic_permutation,
)
from ietkit.symplectic import (
    darboux_basis,
    omega,
    reciprocal_pairing,
    verify_invariance,
)


def main() -> None:
    for d in (2, 3, 4, 5):
        form = omega(hyperelliptic_permutation(d))
        print(f"d={d}: skew form rank {form.rank}")

    form = omega(hyperelliptic_permutation(4))
    print("\nDarboux basis pairs to the standard form:")
    basis = darboux_basis(form)
    for k in range(0, len(basis), 2):
        print(f"  omega(b{k}, b{k+1}) =", form.apply(basis[k], basis[k + 1]))

    rng = Random(7)
    pi = hyperelliptic_permutation(4)
    sides = [rng.choice([TOP_WINS, BOTTOM_WINS]) for _ in range(30)]
    M, pi_end, _ = drive_path(pi, sides)
    print("\nrandom length-30 path: exact invariance",
          verify_invariance(M, pi, pi_end))

    rep = reciprocal_pairing(M, pi, pi_end)
    print("singular values on the image of the form, with pairings:")
    for i, j in rep.pairs:
        print(f"  {rep.values[i]:.6e} * {rep.values[j]:.6e} "
              f"= {rep.values[i] * rep.values[j]:.12f}")
    print(f"pairing defect {rep.defect:.2e}, "
          f"restricted determinant {rep.restricted_det:.12f}")


if __name__ == "__main__":
    main()
