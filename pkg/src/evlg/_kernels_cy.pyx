# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled shot-sampling kernels.

Line-for-line mirror of _kernels_py.py; see that module for the stream
construction and the variate-position table.  Both backends must emit
bit-identical outcome arrays, so keep the double-precision operation order
in sync when editing either file.
"""

from libc.stdint cimport uint64_t, uint8_t

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15UL
cdef double U53 = 1.0 / 9007199254740992.0

cdef int OUTCOME_D1 = 0
cdef int OUTCOME_D2 = 1
cdef int OUTCOME_REMOVED = 2

cdef int MZ_D1 = 0
cdef int MZ_D2 = 1
cdef int MZ_EXPLODED = 2

cdef int REP_RESCUED = 0
cdef int REP_EXPLODED = 1
cdef int REP_INCONCLUSIVE = 2

cdef int INTERCEPT_NONE = 0
cdef int INTERCEPT_UP = 1
cdef int INTERCEPT_DOWN = 2


cdef inline uint64_t _mix(uint64_t z) nogil:
    z ^= z >> 30
    z *= <uint64_t>0xBF58476D1CE4E5B9UL
    z ^= z >> 27
    z *= <uint64_t>0x94D049BB133111EBUL
    z ^= z >> 31
    return z


cdef inline uint64_t _fold2(uint64_t seed, uint64_t f1, uint64_t f2) nogil:
    cdef uint64_t h = seed
    h = _mix((h ^ f1) + GAMMA)
    h = _mix((h ^ f2) + GAMMA)
    return h


cdef inline uint64_t _key(uint64_t folded, uint64_t shot) nogil:
    return _mix((folded ^ shot) + GAMMA)


cdef inline double _u01(uint64_t key, uint64_t position) nogil:
    return <double>(_mix(key + (position + 1) * GAMMA) >> 11) * U53


cdef inline void _rotate(double* a, double* b, double* mr, double* mi,
                         double c, double s, double cp, double sp) nogil:
    cdef double cc = c * c
    cdef double ss = s * s
    cdef double cs = c * s
    cdef double c2p = cp * cp - sp * sp
    cdef double s2p = 2.0 * cp * sp
    cdef double d = a[0] - b[0]
    cdef double cross = 2.0 * cs * (sp * mr[0] + cp * mi[0])
    cdef double na = cc * a[0] + ss * b[0] - cross
    cdef double nb = ss * a[0] + cc * b[0] + cross
    cdef double nmr = cc * mr[0] + ss * (c2p * mr[0] - s2p * mi[0]) + cs * d * sp
    cdef double nmi = cc * mi[0] - ss * (c2p * mi[0] + s2p * mr[0]) + cs * d * cp
    a[0] = na
    b[0] = nb
    mr[0] = nmr
    mi[0] = nmi


def ramsey_fill(uint8_t[::1] out,
                uint64_t seed, uint64_t wait_index, uint64_t arm_code,
                uint64_t start,
                double c1, double s1, double cp1, double sp1,
                double c2, double s2, double cp2, double sp2,
                double coh, double keep, double half_flip,
                int intercept_code, double prep_error, double readout_error):
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t i
    cdef uint64_t folded = _fold2(seed, wait_index, arm_code)
    cdef uint64_t key
    cdef uint64_t k_meas, k_flip
    cdef double a, b, mr, mi, p_int
    cdef bint up
    with nogil:
        for i in range(n):
            key = _key(folded, start + <uint64_t>i)
            if _u01(key, 0) < prep_error:
                a = 0.0
                b = 1.0
            else:
                a = 1.0
                b = 0.0
            mr = 0.0
            mi = 0.0
            _rotate(&a, &b, &mr, &mi, c1, s1, cp1, sp1)
            if intercept_code != INTERCEPT_NONE:
                p_int = a if intercept_code == INTERCEPT_UP else b
                if _u01(key, 1) < p_int:
                    out[i] = OUTCOME_REMOVED
                    continue
                if intercept_code == INTERCEPT_DOWN:
                    a = 1.0
                    b = 0.0
                else:
                    a = 0.0
                    b = 1.0
                mr = 0.0
                mi = 0.0
                k_meas = 2
                k_flip = 3
            else:
                k_meas = 1
                k_flip = 2
            mr = mr * coh
            mi = mi * coh
            a = keep * a + half_flip
            b = keep * b + half_flip
            mr = keep * mr
            mi = keep * mi
            _rotate(&a, &b, &mr, &mi, c2, s2, cp2, sp2)
            up = _u01(key, k_meas) < a
            if _u01(key, k_flip) < readout_error:
                up = not up
            out[i] = OUTCOME_D1 if up else OUTCOME_D2


def mz_fill(uint8_t[::1] out,
            uint64_t seed, uint64_t tag, uint64_t variant, uint64_t start,
            int bomb_present, double eps, double alpha):
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t i
    cdef uint64_t folded = _fold2(seed, tag, variant)
    cdef uint64_t key
    with nogil:
        for i in range(n):
            key = _key(folded, start + <uint64_t>i)
            if bomb_present:
                if _u01(key, 0) < eps:
                    out[i] = MZ_EXPLODED
                elif _u01(key, 1) < eps:
                    out[i] = MZ_D1
                else:
                    out[i] = MZ_D2
            else:
                out[i] = MZ_D1 if _u01(key, 0) < alpha else MZ_D2


def repeated_fill(uint8_t[::1] out,
                  uint64_t seed, uint64_t tag, uint64_t variant, uint64_t start,
                  double eps, uint64_t max_rounds):
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t i
    cdef uint64_t folded = _fold2(seed, tag, variant)
    cdef uint64_t key, r
    cdef int res
    with nogil:
        for i in range(n):
            key = _key(folded, start + <uint64_t>i)
            res = REP_INCONCLUSIVE
            for r in range(max_rounds):
                if _u01(key, 2 * r) < eps:
                    res = REP_EXPLODED
                    break
                if _u01(key, 2 * r + 1) < eps:
                    res = REP_RESCUED
                    break
            out[i] = res


def zeno_fill(uint8_t[::1] out,
              uint64_t seed, uint64_t tag, uint64_t variant, uint64_t start,
              uint64_t n_cycles, double p_block):
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t i
    cdef uint64_t folded = _fold2(seed, tag, variant)
    cdef uint64_t key, c
    cdef int res
    with nogil:
        for i in range(n):
            key = _key(folded, start + <uint64_t>i)
            res = 1
            for c in range(n_cycles):
                if _u01(key, c) < p_block:
                    res = 0
                    break
            out[i] = res
