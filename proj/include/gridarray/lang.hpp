#pragma once

#include "gridarray/lang/ast.hpp"
#include "gridarray/lang/futures.hpp"
#include "gridarray/lang/machine.hpp"
#include "gridarray/lang/parser.hpp"
#include "gridarray/lang/translate.hpp"
