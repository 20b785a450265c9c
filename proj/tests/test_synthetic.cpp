#include "shapelift/shapelift.hpp"
#include <catch2/catch_amalgamated.hpp>
