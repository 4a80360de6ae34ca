#!/usr/bin/env python3
# Regenerates the default inertial direction catalog: a seeded random start
# followed by hill-climbing on the worst 3-subset smallest singular value.
import numpy as np, itertools
rng=np.random.default_rng(20240601)
T=[list(t) for t in itertools.combinations(range(9),3)]
def score(C): return min(np.linalg.svd(C[:,t],compute_uv=False)[-1] for t in T)
C=rng.normal(size=(3,9)); C/=np.linalg.norm(C,axis=0); s=score(C)
step=0.3
for it in range(20000):
    D=C+step*rng.normal(size=C.shape)*(rng.random(9)<0.3); D/=np.linalg.norm(D,axis=0)
    sd=score(D)
    if sd>s: C,s=D,sd
    if it%2000==1999: step*=0.6
print("# worst 3-subset sigma_3:", s)
for j in range(9): print('      {%.17g, %.17g, %.17g},'%tuple(C[:,j]))
