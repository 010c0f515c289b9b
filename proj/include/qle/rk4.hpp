// rk4.hpp: classical fourth-order Runge-Kutta step on Eigen vectors

#pragma once

#include <Eigen/Dense>

namespace qle {

// Scratch space for one RK4 step, sized on first use and then reused so the
// inner time loop does not allocate.
template <class Vector>
struct Rk4Workspace {
    Vector k1, k2, k3, k4, tmp;

    void resize(Eigen::Index n)
    {
        if (k1.size() == n) return;
        k1.resize(n);
        k2.resize(n);
        k3.resize(n);
        k4.resize(n);
        tmp.resize(n);
    }
};

// rhs(t, y, dydt) must write the derivative into dydt.
template <class Vector, class Rhs>
void rk4_step(Rhs&& rhs, double t, double h, Vector& y, Rk4Workspace<Vector>& ws)
{
    ws.resize(y.size());
    rhs(t, y, ws.k1);
    ws.tmp = y + (0.5 * h) * ws.k1;
    rhs(t + 0.5 * h, ws.tmp, ws.k2);
    ws.tmp = y + (0.5 * h) * ws.k2;
    rhs(t + 0.5 * h, ws.tmp, ws.k3);
    ws.tmp = y + h * ws.k3;
    rhs(t + h, ws.tmp, ws.k4);
    y += (h / 6.0) * (ws.k1 + 2.0 * ws.k2 + 2.0 * ws.k3 + ws.k4);
}

} // namespace qle
