# This file is part of TMNet.
# TMNet is a toolkit for task-driven modular networks in compositional
# zero-shot learning.
#
# Copyright (C) 2026 TMNet developers
#
# Distributed under terms of the GNU AGPLv3 license.
