#include <pybind11/pybind11.h>
PYBIND11_MODULE(_blplab, m) { m.doc() = "placeholder"; }
