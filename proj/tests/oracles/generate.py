"""Regenerates tests/oracle_values.hpp from 40-digit mpmath evaluations."""
import pathlib
import mpmath as mp

mp.mp.dps = 40
q = mp.mpf("0.25")
sq = mp.sqrt(q)


def kernel_series(z, w, t=1):
    a = z * mp.conj(w)
    la = mp.log(a)
    total = mp.mpc(0)
    for n in range(-400, 401):
        total += mp.exp(n * la) / (1 + t * q ** (2 * n))
    return total


def theta1(x):
    return mp.jtheta(1, x, q)


def pfun(x):
    out = mp.mpc(1)
    for n in range(0, 80):
        out *= (1 - x * q ** (2 * n)) * (1 - q ** (2 * n + 2) / x)
    return out


def phi(z):
    return sq * pfun(z / sq) / pfun(z * sq)


def psi(gamma, z):
    delta = 1 / (phi(1) * phi(mp.conj(gamma)))
    return delta * phi(z) * phi(mp.conj(gamma) * z) / z


def psi_coefficient(gamma, j):
    # <psi, zeta_j> with the boundary measure: arc length on |z|=1 plus arc length on |z|=q
    def on(r):
        f = lambda th: psi(gamma, r * mp.expj(th)) * mp.conj((r * mp.expj(th)) ** j)
        return mp.quad(f, mp.linspace(0, 2 * mp.pi, 9)) / (2 * mp.pi)
    return (on(mp.mpf(1)) + on(q)) / mp.sqrt(1 + q ** (2 * j))


def c(x):
    x = mp.mpc(x)
    return f"cd({mp.nstr(x.real, 20)}, {mp.nstr(x.imag, 20)})"


lines = ["#pragma once", "", "// Generated by tests/oracles/generate.py (mpmath, 40 digits); q = 0.25.", "",
         '#include "annulus/types.hpp"', "", "namespace annulus::oracle {", ""]

z0, w0 = mp.mpc("0.5", "0.2"), mp.mpc("-0.3", "0.6")
c_prime = 1 / (kernel_series(z0, w0) * kernel_series(z0, -w0))
lines.append(f"inline constexpr double kCPrime = {mp.nstr(c_prime.real, 20)};")
lines.append(f"inline constexpr double kTheta1PrimeZero = {mp.nstr(mp.jtheta(1, 0, q, 1), 20)};")
lines.append("")

pairs = [("0.5", "0.2", "-0.3", "0.6"), ("0.9", "0", "0.9", "0"), ("0.3", "-0.1", "0.7", "0.4"),
         ("-0.26", "0", "0.8", "0.5")]
lines.append("struct KernelSample { cd z; cd w; double t; cd value; };")
lines.append("inline const KernelSample kKernelSamples[] = {")
for zr, zi, wr, wi in pairs:
    z, w = mp.mpc(zr, zi), mp.mpc(wr, wi)
    for t in ["1", "0.3"]:
        lines.append(f"    {{{c(z)}, {c(w)}, {t}, {c(kernel_series(z, w, mp.mpf(t)))}}},")
lines.append("};")
lines.append("")

lines.append("struct ThetaSample { cd x; cd value; };")
lines.append("inline const ThetaSample kThetaSamples[] = {")
for xr, xi in [("0.3", "0"), ("1.2", "0.4"), ("-0.7", "-0.9"), ("2.5", "1.1")]:
    x = mp.mpc(xr, xi)
    lines.append(f"    {{{c(x)}, {c(theta1(x))}}},")
lines.append("};")
lines.append("")

lines.append("struct PsiSample { cd gamma; cd z; cd value; };")
lines.append("inline const PsiSample kPsiSamples[] = {")
for gr, gi in [("1", "0"), ("0", "1"), (str(mp.cos(0.7)), str(mp.sin(0.7)))]:
    g = mp.mpc(gr, gi)
    for zr, zi in [("0.7", "0.1"), ("-0.35", "0.2"), ("0.95", "-0.2")]:
        z = mp.mpc(zr, zi)
        lines.append(f"    {{{c(g)}, {c(z)}, {c(psi(g, z))}}},")
lines.append("};")
lines.append("")

lines.append("struct PhiSample { cd z; cd value; };")
lines.append("inline const PhiSample kPhiSamples[] = {")
for zr, zi in [("0.7", "0.1"), ("0.3", "-0.2"), ("-0.9", "0.3")]:
    z = mp.mpc(zr, zi)
    lines.append(f"    {{{c(z)}, {c(phi(z))}}},")
lines.append("};")
lines.append("")

lines.append("struct CoefficientSample { cd gamma; int index; cd value; };")
lines.append("inline const CoefficientSample kPsiCoefficients[] = {")
for gr, gi in [("1", "0"), ("0", "1")]:
    g = mp.mpc(gr, gi)
    for j in [-3, -1, 0, 1, 2, 5]:
        lines.append(f"    {{{c(g)}, {j}, {c(psi_coefficient(g, j))}}},")
lines.append("};")
lines.append("")
lines.append("}  // namespace annulus::oracle")

out = pathlib.Path(__file__).resolve().parent.parent / "oracle_values.hpp"
out.write_text("\n".join(lines) + "\n")
print("wrote", out)
