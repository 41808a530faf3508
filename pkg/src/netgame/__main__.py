from netgame.cli import main

raise SystemExit(main())
