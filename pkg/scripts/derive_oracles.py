import mpmath as mp
mp.mp.dps = 30
L = lambda s: mp.log(1+mp.e**s)
# 1. translate pair I_1 functional: phi0 = g(s-1)+1/2, phi1 = g(s+1)-1/2; x-uniform; s0 = logit(x)+1 ; s1 = logit(x)-1
def term(sx, pa, pb, kink):
    # split at the zero of pa - pb so the quadrature never sees the corner of |.|
    return mp.quad(lambda x: abs(pa(sx(x)) - pb(sx(x))), [0, kink, 1])
phi0 = lambda s: L(s-1)+mp.mpf(1)/2
phi1 = lambda s: L(s+1)-mp.mpf(1)/2
lg = lambda x: mp.log(x/(1-x))
I1 = term(lambda x: lg(x)+1, phi0, phi1, 1/(1+mp.e)) + term(lambda x: lg(x)-1, phi1, phi0, mp.e/(1+mp.e))
print('I1 shift pair', I1)
# 2. cusp energy p=3, alpha=1/2: val = x s - dual - g(s), s = logit x - a/x, dual = g* - a log x
a = mp.mpf(1)/2
def val(x):
    s = lg(x) - a/x
    dual = x*mp.log(x)+(1-x)*mp.log(1-x) - a*mp.log(x)
    return x*s - dual - L(s)
for p in (1,2,3):
    print('cusp energy', p, mp.quad(lambda x: abs(val(x))**p, [0, mp.mpf('1e-6'), mp.mpf('1e-3'), 0.5, 1]))
# 3. Hilbert map ua 1/2, k=8: phi = 2 g(s/2)
k=8
for j in (0,3,8):
    G = mp.quad(lambda s: mp.e**((j+1)*s - k*2*L(s/2) - 2*L(s)), [-mp.inf, -20, 0, 20, mp.inf])
    print('H8 ua j', j, mp.log(G))
# 4. d_2 cusp vs flat: alpha*sqrt(2)
print('d2 cusp', a*mp.sqrt(2))
# 5. ua energy p=1: u = 2 g(s/2)-g(s) via dual: val with s = 2 logit x, dual g*/a
def valua(x, aa=mp.mpf(1)/2):
    s = lg(x)/aa
    dual = (x*mp.log(x)+(1-x)*mp.log(1-x))/aa
    return x*s - dual - L(s)
print('ua energy1', mp.quad(lambda x: abs(valua(x)), [0, 0.5, 1]))
