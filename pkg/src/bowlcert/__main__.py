from bowlcert.cli import main

raise SystemExit(main())
