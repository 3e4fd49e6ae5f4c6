#include <catch2/catch_amalgamated.hpp>
#include "uhdtest/uhdtest.hpp"
